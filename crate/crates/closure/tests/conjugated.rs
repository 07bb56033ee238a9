use annulus_core::SampleGrid;
use brouwer::{ChartOptions, Curve};
use cf_arith::{GrowthRegistry, PartialQuotients};
use closure::{run_closure, PipelineOptions, Sampling};
use mapkit::{compose, AnnulusMap, HamiltonianBump};

#[test]
fn conjugated_rotation_runs_through_the_pipeline() {
    let p = GrowthRegistry::default().parse("linear:9").unwrap();
    let prefix = PartialQuotients::from_u64(&[1, 1]).unwrap();
    let alpha = cf_arith::synthesize_alpha(p.as_ref(), 3, Some(&prefix), 4).unwrap();
    let h = AnnulusMap::from_prim(HamiltonianBump::new(0.5, 0.5, 0.3, 0.01, 1).unwrap());
    let f = compose(&h, &compose(&AnnulusMap::rotation_exact(&alpha.representative()), &h.inverse()));
    let gamma = Curve::vertical(0.1, 33).image(&h);
    let opts = PipelineOptions {
        sampling: Sampling { grid: SampleGrid::new(64, 9), random: 50, seed: 5 },
        chart: ChartOptions { density_nodes: 257, ..ChartOptions::default() },
        ..PipelineOptions::default()
    };
    let run = run_closure(&f, &gamma, &alpha, 3, &opts).unwrap();
    assert!(run.chart.rigid().is_none());
    assert!(run.closure.periodicity.sup < 1e-6, "{}", run.closure.periodicity.sup);
    assert!(run.closure.gluing < 1e-9 && run.closure.cyclic < 1e-9);
    assert!(run.conjugacy.conjugacy.sup < 1e-6, "{}", run.conjugacy.conjugacy.sup);
    assert!(run.conjugacy.matching < 1e-6);
    assert!(run.conjugacy.seams.value < 1e-6 && run.conjugacy.seams.derivative < 1e-6);
    assert!(run.approximant.gap_identity_holds());
    // h⁻¹ s h is g itself.
    assert!(run.approximant.periodic_to_g.sup < 1e-9);
}
