//! Prints the comparison against the reference temperatures.
fn main() -> thermstack::Result<()> {
    let start = std::time::Instant::now();
    let doc = thermstack::scenarios::reference_tables(None)?;
    print!("{}", doc.to_text());
    eprintln!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
