use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::{Belief, BeliefNet};
use crate::error::{Error, Result};
use crate::game::{Game, Instance};
use crate::kernel::ParamStore;
use crate::student::StudentModel;
use crate::teacher::{ReplayBuffer, TeacherModel, Transition};
use crate::trainer::{MetricRecord, RecordKind, TrainConfig, Trainer};

const MAGIC: &[u8; 8] = b"PRAGCKPT";
const BELIEF_MAGIC: &[u8; 8] = b"PRAGBNET";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        for x in v {
            self.f64(*x);
        }
    }
    fn usizes(&mut self, v: &[usize]) {
        self.usize(v.len());
        for x in v {
            self.usize(*x);
        }
    }
    fn bytes(&mut self, b: &[u8]) {
        self.usize(b.len());
        self.0.extend_from_slice(b);
    }
    fn str(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }
    fn opt_f64(&mut self, v: Option<f64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.f64(x);
            }
            None => self.u8(0),
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Data(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Data("checkpoint length overflows".into()))
    }
    fn len(&mut self, width: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(width) > self.buf.len() - self.pos {
            return Err(Error::Data(format!("checkpoint length {n} exceeds the file")));
        }
        Ok(n)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn usizes(&mut self) -> Result<Vec<usize>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.usize()).collect()
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len(1)?;
        self.take(n)
    }
    fn str(&mut self) -> Result<String> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| Error::Data("checkpoint string is not UTF-8".into()))
    }
    fn opt_f64(&mut self) -> Result<Option<f64>> {
        Ok(match self.u8()? {
            0 => None,
            _ => Some(self.f64()?),
        })
    }
}

fn put_store(w: &mut Writer, tag: &str, store: &ParamStore) {
    w.str(tag);
    w.u64(store.steps());
    w.usize(store.len());
    for ((name, (rows, cols), values), (_, m1, m2)) in store.blocks().zip(store.moment_blocks()) {
        w.str(name);
        w.usize(rows);
        w.usize(cols);
        w.f64s(values);
        w.f64s(m1);
        w.f64s(m2);
    }
}

fn get_store(r: &mut Reader, tag: &str, store: &mut ParamStore) -> Result<()> {
    let found = r.str()?;
    if found != tag {
        return Err(Error::Data(format!("expected parameter store {tag}, found {found}")));
    }
    store.set_steps(r.u64()?);
    let n = r.usize()?;
    if n != store.len() {
        return Err(Error::Data(format!("store {tag} has {n} blocks, expected {}", store.len())));
    }
    for _ in 0..n {
        let name = r.str()?;
        let shape = (r.usize()?, r.usize()?);
        let values = r.f64s()?;
        let m1 = r.f64s()?;
        let m2 = r.f64s()?;
        store.load_block(&name, shape, &values, Some((&m1, &m2)))?;
    }
    Ok(())
}

fn put_game(w: &mut Writer, g: &Game) {
    w.usize(g.vocab());
    w.usize(g.candidates.len());
    for c in &g.candidates {
        w.usizes(c.attrs());
    }
    w.usize(g.target);
    w.usizes(&g.teacher_perm);
    w.usizes(&g.student_perm);
    w.f64(g.message_cost);
    w.usize(g.max_rounds);
}

fn get_game(r: &mut Reader) -> Result<Game> {
    let vocab = r.usize()?;
    let k = r.len(8)?;
    let candidates = (0..k)
        .map(|_| Instance::new(vocab, r.usizes()?))
        .collect::<Result<Vec<_>>>()?;
    let game = Game {
        candidates,
        target: r.usize()?,
        teacher_perm: r.usizes()?,
        student_perm: r.usizes()?,
        message_cost: r.f64()?,
        max_rounds: r.usize()?,
    };
    game.validate()?;
    Ok(game)
}

fn get_belief(r: &mut Reader) -> Result<Belief> {
    Belief::new(r.f64s()?)
}

fn put_metric(w: &mut Writer, m: &MetricRecord) {
    w.u64(m.iteration);
    w.usize(m.phase);
    w.u8(match m.kind {
        None => 0,
        Some(RecordKind::Teacher) => 1,
        Some(RecordKind::Student) => 2,
        Some(RecordKind::Eval) => 3,
    });
    for v in [m.q_loss, m.obverter_loss, m.neg_objective] {
        w.opt_f64(v);
    }
    match m.clamped {
        Some(c) => {
            w.u8(1);
            w.usize(c);
        }
        None => w.u8(0),
    }
    for v in [
        m.accuracy,
        m.level0,
        m.level1,
        m.level2,
        m.level_inf,
        m.hard_accuracy,
        m.mean_gain,
        m.validity,
    ] {
        w.opt_f64(v);
    }
}

fn get_metric(r: &mut Reader) -> Result<MetricRecord> {
    let iteration = r.u64()?;
    let phase = r.usize()?;
    let kind = match r.u8()? {
        0 => None,
        1 => Some(RecordKind::Teacher),
        2 => Some(RecordKind::Student),
        3 => Some(RecordKind::Eval),
        other => return Err(Error::Data(format!("unknown record kind {other}"))),
    };
    let (q_loss, obverter_loss, neg_objective) = (r.opt_f64()?, r.opt_f64()?, r.opt_f64()?);
    let clamped = match r.u8()? {
        0 => None,
        _ => Some(r.usize()?),
    };
    Ok(MetricRecord {
        iteration,
        phase,
        kind,
        q_loss,
        obverter_loss,
        neg_objective,
        clamped,
        accuracy: r.opt_f64()?,
        level0: r.opt_f64()?,
        level1: r.opt_f64()?,
        level2: r.opt_f64()?,
        level_inf: r.opt_f64()?,
        hard_accuracy: r.opt_f64()?,
        mean_gain: r.opt_f64()?,
        validity: r.opt_f64()?,
    })
}

/// Serializes everything needed to continue a run bit for bit: parameters
/// with optimizer state, the random stream, the replay buffer, counters and
/// the metrics written so far.
pub fn encode_checkpoint(t: &Trainer) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend_from_slice(MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.str(&t.config.fingerprint());
    w.u64(t.iteration);
    w.u64(t.teacher_updates);
    w.bytes(&t.rng.get_seed());
    w.u64(t.rng.get_stream());
    w.bytes(&t.rng.get_word_pos().to_le_bytes());
    put_store(&mut w, "teacher.online.belief", &t.teacher.online.belief.params);
    put_store(&mut w, "teacher.online.q", &t.teacher.online.q_params);
    put_store(&mut w, "teacher.target.belief", &t.teacher.target.belief.params);
    put_store(&mut w, "teacher.target.q", &t.teacher.target.q_params);
    put_store(&mut w, "student.belief", &t.student.belief.params);
    put_store(&mut w, "student.gate", &t.student.gate_params);
    w.usize(t.buffer.capacity());
    w.usize(t.buffer.len());
    for tr in t.buffer.iter() {
        put_game(&mut w, &tr.game);
        w.f64s(tr.prior.probs());
        w.usize(tr.message);
        w.f64s(tr.next_belief.probs());
        w.f64(tr.reward);
        w.u8(tr.terminal as u8);
    }
    w.usize(t.metrics.len());
    for m in &t.metrics {
        put_metric(&mut w, m);
    }
    w.0
}

/// Rebuilds a trainer from a checkpoint. `config` must be the configuration
/// the checkpoint was written with.
pub fn decode_checkpoint(
    bytes: &[u8],
    config: TrainConfig,
    train_games: Vec<Arc<Game>>,
    eval_games: Vec<Arc<Game>>,
) -> Result<Trainer> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Data("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "checkpoint format version {version}, this build reads {CHECKPOINT_VERSION}"
        )));
    }
    let fingerprint = r.str()?;
    if fingerprint != config.fingerprint() {
        return Err(Error::Config("checkpoint was written with a different configuration".into()));
    }
    let iteration = r.u64()?;
    let teacher_updates = r.u64()?;
    let seed: [u8; 32] = r.bytes()?.try_into().map_err(|_| Error::Data("bad rng seed".into()))?;
    let stream = r.u64()?;
    let word_pos: [u8; 16] = r.bytes()?.try_into().map_err(|_| Error::Data("bad rng position".into()))?;
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from_le_bytes(word_pos));

    // Shapes come from the configuration; values from the file.
    let mut init = ChaCha8Rng::seed_from_u64(0);
    let belief = config.belief_config();
    let mut teacher = TeacherModel::new(belief, config.teacher_config(), &mut init)?;
    let mut student = StudentModel::new(belief, config.student_config(), &mut init)?;
    get_store(&mut r, "teacher.online.belief", &mut teacher.online.belief.params)?;
    get_store(&mut r, "teacher.online.q", &mut teacher.online.q_params)?;
    get_store(&mut r, "teacher.target.belief", &mut teacher.target.belief.params)?;
    get_store(&mut r, "teacher.target.q", &mut teacher.target.q_params)?;
    get_store(&mut r, "student.belief", &mut student.belief.params)?;
    get_store(&mut r, "student.gate", &mut student.gate_params)?;

    let capacity = r.usize()?;
    if capacity == 0 {
        return Err(Error::Data("replay buffer capacity zero".into()));
    }
    let mut buffer = ReplayBuffer::new(capacity);
    let n = r.len(1)?;
    for _ in 0..n {
        let game = Arc::new(get_game(&mut r)?);
        buffer.push(Transition {
            game,
            prior: get_belief(&mut r)?,
            message: r.usize()?,
            next_belief: get_belief(&mut r)?,
            reward: r.f64()?,
            terminal: r.u8()? != 0,
        });
    }
    let n = r.len(1)?;
    let metrics = (0..n).map(|_| get_metric(&mut r)).collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Data("trailing bytes after checkpoint".into()));
    }
    Trainer::from_parts(
        config,
        teacher,
        student,
        buffer,
        rng,
        iteration,
        teacher_updates,
        metrics,
        train_games,
        eval_games,
    )
}

/// True if `bytes` start like a full training checkpoint.
pub fn is_trainer_checkpoint(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

/// A pretrained belief network on its own, in the same block layout.
pub fn encode_belief_net(net: &BeliefNet) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend_from_slice(BELIEF_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    put_store(&mut w, "belief", &net.params);
    w.0
}

/// Loads values into `net`, whose shapes must match the file.
pub fn decode_belief_net(bytes: &[u8], net: &mut BeliefNet) -> Result<()> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(BELIEF_MAGIC.len())? != BELIEF_MAGIC {
        return Err(Error::Data("not a belief network file".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "belief network format version {version}, this build reads {CHECKPOINT_VERSION}"
        )));
    }
    get_store(&mut r, "belief", &mut net.params)?;
    if r.pos != bytes.len() {
        return Err(Error::Data("trailing bytes after belief network".into()));
    }
    Ok(())
}

pub fn save_checkpoint(path: &Path, trainer: &Trainer) -> Result<()> {
    std::fs::write(path, encode_checkpoint(trainer)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(
    path: &Path,
    config: TrainConfig,
    train_games: Vec<Arc<Game>>,
    eval_games: Vec<Arc<Game>>,
) -> Result<Trainer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, config, train_games, eval_games).map_err(|e| e.with_context(path.display().to_string()))
}
