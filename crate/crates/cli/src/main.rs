use clap::Parser;

fn main() {
    let cli = pubstyle_cli::Cli::parse();
    match pubstyle_cli::run(&cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("{}", e.one_line());
            std::process::exit(e.exit_code());
        }
    }
}
