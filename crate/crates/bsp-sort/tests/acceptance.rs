//! Acceptance suite placeholder; filled in after the library compiles.

fn main() {
    println!("acceptance: pending");
}
