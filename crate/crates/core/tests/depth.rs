use torus_cascade::pipeline::{
    analyze_instance, assemble_instance, build_profiles, run_tuner, solve_instance, PipelineConfig,
};
use torus_cascade::smooth_kit::Mutation;

/// Tuned single-layer instances at depths 8, 12 and 16: the number of
/// certified circles is the number of odd j up to N - 2, and the component
/// count never decreases with N.
#[test]
fn component_count_grows_with_depth() {
    let mut counts = Vec::new();
    for depth in [8usize, 12, 16] {
        let mut cfg = PipelineConfig::default();
        cfg.tuner.k = 1;
        cfg.profile.cascade.depth = depth;
        cfg.validate().unwrap();
        let profiles = build_profiles(&cfg, &Mutation::default()).unwrap();
        let (_, state) = run_tuner(&profiles, &cfg.tuner, None, None).unwrap();
        let inst = solve_instance(&cfg, &profiles, &state, 1).unwrap();
        let analysis = analyze_instance(&cfg, &inst).unwrap();
        assert!(analysis.properties.all_hold(), "N = {depth}: {:?}", analysis.properties.failures);
        assert!(analysis.oscillation.n_critical >= depth - 2);
        let asm = assemble_instance(&cfg, &inst, &analysis).unwrap();
        let odd = (analysis.properties.j0..=depth - 2).filter(|j| j % 2 == 1).count();
        let l = &asm.levelset;
        assert_eq!(l.n_circles, odd, "N = {depth}");
        assert!(l.n_components >= odd);
        assert_eq!((asm.refined.n_components, asm.refined.n_circles), (l.n_components, l.n_circles));
        eprintln!("N = {depth}: {} components, {} circles", l.n_components, l.n_circles);
        counts.push(l.n_components);
    }
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}
