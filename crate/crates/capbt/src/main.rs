fn main() {
    // CLI wired up once the simulator stack lands.
    println!("capbt");
}
