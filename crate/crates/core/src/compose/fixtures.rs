//! Small hand-checked instances shared by the composer tests.

use crate::index::IndexedTempCpNet;
use crate::preference::TempCpNet;
use crate::request::{Request, RequestSet};

/// Two unit intervals over one summed `cpu` attribute; the provider prefers
/// higher load. Interval 0 tops out at 20, interval 1 at 30.
pub const TWO_STEP: &str = "
[attributes]
cpu = sum
[interval first]
span = 0 1
[levels]
cpu = C1 C2
[ranges]
cpu = 0 10 20
[cpt]
cpu: C2 > C1
[interval second]
span = 1 2
[levels]
cpu = C1 C2 C3
[ranges]
cpu = 0 10 20 30
[cpt]
cpu: C3 > C2 > C1
";

/// A (interval 0, cpu 15), B (both intervals, cpu 10), C (interval 1,
/// cpu 10). By hand: {A,B} overflows interval 0, the best selection is
/// {B,C} with rank 1 + 1, and {A,C} scores 1 + 2.
pub fn two_step() -> (IndexedTempCpNet, RequestSet) {
    let net = IndexedTempCpNet::build(TempCpNet::parse(TWO_STEP).unwrap()).unwrap();
    let set = RequestSet::new(
        vec!["cpu".into()],
        vec![
            Request::constant("A", 0, 1, &[15.0], &[false]),
            Request::constant("B", 0, 2, &[10.0], &[false]),
            Request::constant("C", 1, 1, &[10.0], &[false]),
        ],
    )
    .unwrap();
    (net, set)
}

/// One interval whose single attribute is a chain of `levels` levels, so
/// its ranks run 1..=levels; a higher value is preferred.
pub fn chain(levels: usize) -> IndexedTempCpNet {
    let names: Vec<String> = (1..=levels).map(|i| format!("L{i}")).collect();
    let bounds: Vec<String> = (0..=levels).map(|i| (i * 10).to_string()).collect();
    let order: Vec<&str> = names.iter().rev().map(String::as_str).collect();
    let doc = format!(
        "[attributes]\ncpu = sum\n[interval only]\nspan = 0 1\n[levels]\ncpu = {}\n[ranges]\ncpu = {}\n[cpt]\ncpu: {}\n",
        names.join(" "),
        bounds.join(" "),
        order.join(" > ")
    );
    IndexedTempCpNet::build(TempCpNet::parse(&doc).unwrap()).unwrap()
}

pub fn requests(specs: &[(&str, u32, u32, f64)]) -> RequestSet {
    RequestSet::new(
        vec!["cpu".into()],
        specs
            .iter()
            .map(|&(id, start, len, cpu)| Request::constant(id, start, len, &[cpu], &[false]))
            .collect(),
    )
    .unwrap()
}
