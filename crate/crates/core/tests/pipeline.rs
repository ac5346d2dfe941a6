use rtscatter::analytic::{resonance_energy, transmission_probability};
use rtscatter::kostin::{cross_validate, SolverConfig};
use rtscatter::output::{Format, Header, SweepTable};
use rtscatter::problem::{PhysicalConstants, ScatteringProblem, SquareWell, WaveNumbers};
use rtscatter::scan::{find_resonances, sweep, MethodSet, SweepSpec};

fn spec(nus: Vec<f64>, points: usize) -> SweepSpec {
    SweepSpec {
        well: SquareWell::new(25.0, 1.0).unwrap(),
        constants: PhysicalConstants::natural(),
        energies: SweepSpec::linspace(0.5, 40.0, points),
        nu_values: nus,
        methods: MethodSet::ALL,
    }
}

#[test]
fn sweep_table_survives_both_formats() {
    let s = spec(vec![0.0, 1e-3], 40);
    let cfg = SolverConfig::for_width(1.0);
    let table = SweepTable {
        header: Header::for_sweep(&s, &cfg),
        rows: sweep(&s, &cfg).unwrap(),
    };
    let csv = table.render(Format::Csv).unwrap();
    let json = table.render(Format::Json).unwrap();
    let back = SweepTable::parse(&json).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.to_csv().unwrap(), csv);
}

#[test]
fn sweep_numeric_column_tracks_analytic_at_zero_nu() {
    let s = spec(vec![0.0], 25);
    let rows = sweep(&s, &SolverConfig::for_width(1.0)).unwrap();
    for r in &rows {
        let wn = WaveNumbers::from_energy(r.energy, 25.0, PhysicalConstants::natural()).unwrap();
        let exact = transmission_probability(&wn, 1.0);
        assert_eq!(r.t2_analytic, Some(exact));
        assert!((r.t2_numeric.unwrap() - exact).abs() < 1e-7, "E = {}", r.energy);
    }
}

#[test]
fn resonance_scan_matches_formula() {
    let s = spec(vec![0.0], 200);
    let scan = find_resonances(&s, &SolverConfig::for_width(1.0)).unwrap();
    let e3 = resonance_energy(&s.well, &s.constants, 3);
    assert!(!scan.degenerate);
    assert_eq!(scan.hits.len(), 2);
    for h in &scan.hits {
        assert_eq!(h.order, Some(3));
        assert!((h.energy - e3).abs() / e3 < 1e-5);
    }
}

#[test]
fn both_formulations_agree_with_dissipation() {
    let p = ScatteringProblem::natural(2.5, 1.0, 2.0, 1e-3).unwrap();
    let cv = cross_validate(&p, &SolverConfig::for_width(1.0)).unwrap();
    assert!(cv.passed, "{:?}", cv.failure_summary());
    assert!(cv.complex.flux_deficit.abs() < 1e-12);
}
