//! Teaching sets, the teaching hierarchy and the recursive teaching dimension
//! of a concept class given as binary rows.
//!
//! cargo run --example teaching_dimension -- [class-file]
//!
//! Without a file, uses three objects over the features blue, red, sphere,
//! cone: a blue sphere, a red sphere and a blue cone.

use pragmatic_protocol::rtd::{rtd, teaching_dimension, teaching_hierarchy, teaching_set, ConceptClass};

fn main() -> pragmatic_protocol::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).map_err(|e| pragmatic_protocol::Error::Data(format!("{path}: {e}")))?,
        None => "1010\n0110\n1001\n".to_string(),
    };
    let class = ConceptClass::parse(&text)?;
    println!("{} concepts over {} features", class.len(), class.n());
    for c in 0..class.len() {
        println!(
            "  concept {c}: TD {} via features {:?}",
            teaching_dimension(&class, c)?,
            teaching_set(&class, c)?
        );
    }
    for (j, (concepts, d)) in teaching_hierarchy(&class).levels.iter().enumerate() {
        println!("level {j}: {concepts:?} taught with {d} example(s) once earlier levels are known");
    }
    println!("RTD = {}", rtd(&class));
    Ok(())
}
