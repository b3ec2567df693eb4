//! Regenerates the bundled synthetic fixture:
//! `cargo run -p factorlab-cli --example make_fixture [dir] [seed]`.

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "crates/cli/tests/fixtures".into());
    let seed = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(factorlab_cli::synth::DEFAULT_SEED);
    factorlab_cli::synth::write_dataset(std::path::Path::new(&dir), seed)?;
    println!("wrote synthetic dataset to {dir}");
    Ok(())
}
