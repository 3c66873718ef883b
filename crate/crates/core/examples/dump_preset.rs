fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "case2".into());
    print!("{}", clustersync::experiment::write_config(&clustersync::preset(&name).unwrap()));
}
