fn main() -> anyhow::Result<()> {
    metaprop::cli::main()
}
