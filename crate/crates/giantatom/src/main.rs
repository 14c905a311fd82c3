fn main() {
    std::process::exit(giantatom::cli_main());
}
