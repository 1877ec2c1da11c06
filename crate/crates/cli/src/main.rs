use clap::Parser;

fn main() {
    let cli = toposlos_cli::Cli::parse();
    let code = toposlos_cli::run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
