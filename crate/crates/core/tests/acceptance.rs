//! Release acceptance: one test per criterion, each printing a single
//! pass/fail line (run with --nocapture to see passing lines too).

use glvortex::checks::run_criterion;

fn criterion(id: usize) {
    let result = run_criterion(id).unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    let verdict = if result.pass() { "PASS" } else { "FAIL" };
    println!(
        "criterion {:2} [{}] {} ({:.1}s)",
        result.id, verdict, result.title, result.seconds
    );
    for note in &result.notes {
        println!("             note: {note}");
    }
    if !result.pass() {
        for c in result.checks.iter().filter(|c| !c.pass) {
            println!(
                "             failed: {} measured {:.6e} expected {:.6e} tol {:.1e}",
                c.name, c.measured, c.expected, c.tolerance
            );
        }
        panic!("criterion {id} failed");
    }
}

#[test]
fn acceptance_01_disk_renormalized_energy() {
    criterion(1);
}

#[test]
fn acceptance_02_w0_invariance() {
    criterion(2);
}

#[test]
fn acceptance_03_wp_closed_forms() {
    criterion(3);
}

#[test]
fn acceptance_04_optimal_vortex() {
    criterion(4);
}

#[test]
fn acceptance_05_gl_continuation_disk() {
    criterion(5);
}

#[test]
fn acceptance_06_gl_continuation_quad() {
    criterion(6);
}

#[test]
fn acceptance_07_green_mass() {
    criterion(7);
}

#[test]
fn acceptance_08_flow_round_trip() {
    criterion(8);
}

#[test]
fn acceptance_09_cartan_identity() {
    criterion(9);
}

#[test]
fn acceptance_10_degree_and_seminorm() {
    criterion(10);
}

#[test]
fn acceptance_11_poisson_limit() {
    criterion(11);
}

#[test]
fn acceptance_12_gradient_consistency() {
    criterion(12);
}
