use semra_core::optimizer::brute_force;
use semra_core::testgen::mixed_instance;

fn main() {
    let inst = mixed_instance(3);
    let report = brute_force(&inst).unwrap();
    println!("{}", serde_json::to_string_pretty(&inst).unwrap());
    eprintln!("selection: {:?}", report.selection.indices());
    eprintln!("objective: {:?}", report.objective);
    eprintln!("n = {}", inst.n());
}
