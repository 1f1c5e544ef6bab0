fn main() {
    dipolink::cli::main()
}
