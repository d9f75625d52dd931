use approx::assert_relative_eq;

use sdap::ci::SymbolSpec;
use sdap::config::{BlockForm, LiftForm, ScenarioConfig};
use sdap::oracle::brute_force_selection;
use sdap::precoder::{fixed_t_solve, sca_solve, Variant};
use sdap::scenario::draw_instance;
use sdap::Error;

fn cfg(n: usize, k: usize) -> ScenarioConfig {
    ScenarioConfig { n_das: n, n_eves: k, ..ScenarioConfig::default() }
}

#[test]
fn full_and_diagonal_lifts_agree() {
    let full = cfg(6, 2);
    let diag = ScenarioConfig { lift: LiftForm::Diagonal, ..full.clone() };
    let sym = SymbolSpec::from_config(&full);
    for v in Variant::ALL {
        for trial in 0..3 {
            let (_, ch) = draw_instance(&full, trial);
            let a = sca_solve(v, &ch, &full, &sym).unwrap();
            let b = sca_solve(v, &ch, &diag, &sym).unwrap();
            // Selections may differ where several tie, as under the AN floor.
            assert_relative_eq!(a.power.total_mw, b.power.total_mw, max_relative = 1e-5);
            assert!(b.audit_violation < 1e-6);
        }
    }
}

#[test]
fn lmi_block_form_matches_soc() {
    let soc = cfg(4, 2);
    let lmi = ScenarioConfig { block_form: BlockForm::Lmi, ..soc.clone() };
    let sym = SymbolSpec::from_config(&soc);
    let (_, ch) = draw_instance(&soc, 0);
    let on = vec![true; 4];
    for v in [Variant::ImperfectProb, Variant::UnknownProb] {
        let a = fixed_t_solve(v, &ch, &soc, &sym, &on).unwrap();
        let b = fixed_t_solve(v, &ch, &lmi, &sym, &on).unwrap();
        assert_relative_eq!(a.power.total_mw, b.power.total_mw, max_relative = 1e-5);
    }
}

#[test]
fn equal_circuit_powers_keep_every_antenna_on() {
    let c = ScenarioConfig { p_off_mw: 500.0, p_on_mw: 500.0, penalty_phi: Some(1e4), ..cfg(4, 2) };
    let sym = SymbolSpec::from_config(&c);
    let (_, ch) = draw_instance(&c, 1);
    let sol = sca_solve(Variant::ImperfectProb, &ch, &c, &sym).unwrap();
    assert_eq!(sol.selection.t_rounded, vec![true; 4]);
    let all_on = fixed_t_solve(Variant::ImperfectProb, &ch, &c, &sym, &[true; 4]).unwrap();
    assert_relative_eq!(sol.power.total_mw, all_on.power.total_mw, max_relative = 1e-7);
}

#[test]
fn single_antenna_enumeration() {
    // Without Eves the only constraint is the IR wedge.
    let c = ScenarioConfig { gamma_d_db: 0.0, ..cfg(1, 0) };
    let sym = SymbolSpec::from_config(&c);
    let (_, ch) = draw_instance(&c, 0);
    let bf = brute_force_selection(Variant::ImperfectProb, &ch, &c, &sym).unwrap();
    assert_eq!(bf.table.len(), 2);
    // Off leaves no transmit power, which cannot reach a positive SINR target.
    assert_eq!(bf.table[0].t, vec![false]);
    assert!(bf.table[0].total_mw.is_none());
    assert_eq!(bf.best_t, Some(vec![true]));
}

#[test]
fn enumeration_flags_infeasible_instances() {
    let c = ScenarioConfig { gamma_d_db: 90.0, p_da_mw: 1e-6, ..cfg(3, 1) };
    let sym = SymbolSpec::from_config(&c);
    let (_, ch) = draw_instance(&c, 0);
    let bf = brute_force_selection(Variant::ImperfectDet, &ch, &c, &sym).unwrap();
    assert_eq!(bf.table.len(), 8);
    assert_eq!(bf.feasible_count(), 0);
    assert!(!bf.has_solution());
    assert!(bf.best_total_mw.is_infinite());
    assert!(matches!(sca_solve(Variant::ImperfectDet, &ch, &c, &sym), Err(Error::Infeasible { .. })));
}

#[test]
fn brute_force_never_loses_to_the_selection_loop() {
    let c = cfg(3, 1);
    let sym = SymbolSpec::from_config(&c);
    for trial in 0..4 {
        let (_, ch) = draw_instance(&c, trial);
        for v in Variant::ALL {
            let bf = brute_force_selection(v, &ch, &c, &sym).unwrap();
            let sol = sca_solve(v, &ch, &c, &sym).unwrap();
            assert!(bf.best_total_mw <= sol.power.total_mw + 1e-6);
            let entry = bf.table.iter().find(|e| e.t == sol.selection.t_rounded).unwrap();
            assert_relative_eq!(entry.total_mw.unwrap(), sol.power.total_mw, max_relative = 1e-9);
        }
    }
}
