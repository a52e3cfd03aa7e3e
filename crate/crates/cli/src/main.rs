use clap::Parser;

fn main() {
    let args = dipole_gs_cli::Args::parse();
    std::process::exit(dipole_gs_cli::run(&args));
}
