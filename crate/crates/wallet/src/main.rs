fn main() {
    std::process::exit(mfkdf_wallet::cli::main());
}
