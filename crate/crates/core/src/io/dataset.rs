use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, Instance};

/// On-disk form of one game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GameRecord {
    vocab: usize,
    candidates: Vec<Vec<usize>>,
    target: usize,
    teacher_perm: Vec<usize>,
    student_perm: Vec<usize>,
    message_cost: f64,
    max_rounds: usize,
}

impl From<&Game> for GameRecord {
    fn from(g: &Game) -> Self {
        GameRecord {
            vocab: g.vocab(),
            candidates: g.candidates.iter().map(|c| c.attrs().to_vec()).collect(),
            target: g.target,
            teacher_perm: g.teacher_perm.clone(),
            student_perm: g.student_perm.clone(),
            message_cost: g.message_cost,
            max_rounds: g.max_rounds,
        }
    }
}

impl GameRecord {
    fn into_game(self) -> Result<Game> {
        let candidates = self
            .candidates
            .into_iter()
            .map(|a| Instance::new(self.vocab, a))
            .collect::<Result<Vec<_>>>()?;
        let game = Game {
            candidates,
            target: self.target,
            teacher_perm: self.teacher_perm,
            student_perm: self.student_perm,
            message_cost: self.message_cost,
            max_rounds: self.max_rounds,
        };
        game.validate()?;
        Ok(game)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// One JSON object per line.
pub fn write_dataset<'a>(path: &Path, games: impl IntoIterator<Item = &'a Game>) -> Result<()> {
    let mut w = create(path)?;
    for g in games {
        let line = serde_json::to_string(&GameRecord::from(g)).expect("game serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads and validates every game; errors name the offending line.
pub fn read_dataset(path: &Path) -> Result<Vec<Game>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut games = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", path.display(), i + 1);
        let record: GameRecord =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("{}: {e}", at())))?;
        let game = record.into_game().map_err(|e| match e {
            Error::Data(msg) | Error::Config(msg) => Error::Data(format!("{}: {msg}", at())),
            other => other.with_context(at()),
        })?;
        games.push(game);
    }
    Ok(games)
}

/// Instances, one attribute list per line.
pub fn write_instances(path: &Path, instances: &[Instance]) -> Result<()> {
    let mut w = create(path)?;
    for inst in instances {
        let line = serde_json::to_string(inst).expect("instance serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_instances(path: &Path) -> Result<Vec<Instance>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let raw: Instance =
                serde_json::from_str(l).map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
            Instance::new(raw.vocab(), raw.attrs().to_vec())
                .map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}
