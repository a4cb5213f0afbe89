use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Method, Params, ScenarioId, SolverSpec, SparsityRule};
use super::output::Metric;
use crate::dictionary::{make_orthogonal_dft, make_overcomplete_dft, mismatch_error, refine_dictionary};
use crate::error::{Error, Result};
use crate::linalg::{column_norms, is_real, CMatrix, CVector, C64};
use crate::mmv::{gsomp_distinct, somp, MmvProblem};
use crate::model::{
    make_bernoulli_matrix, make_complex_gaussian_matrix, make_gaussian_matrix, nmse,
    random_partial_dft_matrix, slice, symbol_errors, synthesize_sparse_vector, Constellation,
    ConstellationKind, NoiseSpec, ValueLaw,
};
use crate::solvers::{
    extract_support, l0_exhaustive, lmmse_isotropic, ls_solve, min_norm_solve, oracle_ls, omp,
    sliced_parallel_greedy, IsotropicLmmse, RecoveryResult, SolverConfig, SparseSolver,
};
use crate::sparsity::{estimate_k_cv, estimate_k_residual, inflate_k, CvSplit};
use crate::wireless::{
    aud_pipeline, build_angular_model, build_localization_model, build_mmwave_model,
    build_mwc_model, build_ofdm_pilot_model, build_toeplitz_pilot_model, correlation_threshold_detect,
    impulse_cancel_pipeline, lmmse_detect, lmmse_top_k, noise_variance_for_snr, observe_rss,
    AudCodebook, ClusteredChannel, ImpulseConfig, MeasurementModel, MmWaveConfig, MwcConfig,
    OfdmConfig, RssMap,
};

/// One metric value of one series in one trial.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sample {
    pub series: String,
    pub metric: Metric,
    pub value: f64,
}

fn sample(series: &str, metric: Metric, value: f64) -> Sample {
    Sample {
        series: series.to_string(),
        metric,
        value,
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

const NMSE_FLOOR: f64 = 1e-30;

fn nmse_db(est: &CVector, truth: &CVector) -> Result<f64> {
    Ok(10.0 * nmse(est, truth)?.max(NMSE_FLOOR).log10())
}

fn hit(found: &[usize], truth: &[usize]) -> f64 {
    let mut a = found.to_vec();
    let mut b = truth.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    f64::from(u8::from(a == b))
}

const SPARSE_METHODS: &[Method] = &[Method::Omp, Method::Iht, Method::Bpdn, Method::ReweightedL1, Method::Sbl];
const VECTOR_METHODS: &[Method] = &[
    Method::Omp,
    Method::Iht,
    Method::Bpdn,
    Method::ReweightedL1,
    Method::Sbl,
    Method::L0,
    Method::MinNorm,
    Method::Ls,
    Method::Lmmse,
    Method::OracleLs,
];

fn allowed_methods(scenario: ScenarioId) -> Vec<Method> {
    use ScenarioId::*;
    match scenario {
        GaussianCs | SlicedQam => {
            let mut v = VECTOR_METHODS.to_vec();
            v.push(Method::SlicedGreedy);
            v
        }
        ToeplitzChannel | OfdmPilot | AngularChannel => VECTOR_METHODS.to_vec(),
        ImpulseOfdm | Aud => SPARSE_METHODS.to_vec(),
        Mwc | Localization | MmWave | ErrorDetection => {
            let mut v = SPARSE_METHODS.to_vec();
            v.push(Method::L0);
            v
        }
        Mmv => vec![Method::Omp, Method::Somp, Method::Gsomp],
        ClusteredDictionary | CvSparsity => Vec::new(),
    }
}

/// Rejects solvers a scenario cannot run.
pub(crate) fn check_solvers(cfg: &ExperimentConfig) -> Result<()> {
    let allowed = allowed_methods(cfg.scenario);
    let needs_solver = !allowed.is_empty();
    if needs_solver && cfg.solvers.is_empty() {
        return Err(config_error(format!("scenario {} needs at least one [[solver]]", cfg.scenario)));
    }
    for s in &cfg.solvers {
        if !allowed.contains(&s.method) {
            let valid: Vec<&str> = allowed.iter().map(|m| m.id()).collect();
            return Err(config_error(format!(
                "solver {} is not available in scenario {}; valid ids: {}",
                s.method,
                cfg.scenario,
                if valid.is_empty() { "none".to_string() } else { valid.join(", ") }
            )));
        }
        if cfg.scenario == ScenarioId::ImpulseOfdm
            && !matches!(s.sparsity, SparsityRule::Known | SparsityRule::Unset)
        {
            return Err(config_error("impulse-ofdm solvers take sparsity = known or unset"));
        }
    }
    Ok(())
}

fn as_sparse(method: Method) -> Option<SparseSolver> {
    Some(match method {
        Method::Omp => SparseSolver::Omp,
        Method::Iht => SparseSolver::Iht,
        Method::Bpdn => SparseSolver::Bpdn,
        Method::ReweightedL1 => SparseSolver::ReweightedL1,
        Method::Sbl => SparseSolver::Sbl,
        _ => return None,
    })
}

/// Per-instance solver settings: sparsity rule, λ rule and noise knowledge.
fn configure(
    spec: &SolverSpec,
    h: &CMatrix,
    y: &CVector,
    k: usize,
    noise_variance: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SolverConfig> {
    let (m, n) = h.shape();
    let mut cfg = spec.config.clone();
    match spec.sparsity {
        SparsityRule::Unset => {}
        SparsityRule::Known => cfg.sparsity_k = Some(k),
        SparsityRule::Inflated => cfg.sparsity_k = Some(inflate_k(k).min(n)),
        SparsityRule::CrossValidated => {
            let split = CvSplit::random(m, 0.8, rng)?;
            let k_max = (split.train_rows.len() / 2).clamp(1, n);
            cfg.sparsity_k = Some(estimate_k_cv(h, y, &split, k_max)?.k_hat.max(1));
        }
        SparsityRule::Residual => {
            cfg.sparsity_k = None;
            let floor = 1e-9 * y.norm().max(f64::MIN_POSITIVE);
            cfg.residual_tol = (spec.residual_scale * (m as f64 * noise_variance).sqrt()).max(floor);
        }
    }
    let sigma = noise_variance.sqrt();
    match (spec.lambda_scale, spec.lambda_rel) {
        (Some(scale), _) if sigma > 0.0 => {
            let col = column_norms(h).into_iter().fold(0.0, f64::max);
            cfg.lambda = scale * sigma * (2.0 * (n as f64).ln()).sqrt() * col;
        }
        (_, Some(rel)) => {
            let peak = h.ad_mul(y).iter().map(|z| z.norm()).fold(0.0, f64::max);
            cfg.lambda = rel * peak;
        }
        _ => {}
    }
    if spec.known_noise && noise_variance > 0.0 {
        cfg.noise_variance = Some(noise_variance);
    }
    Ok(cfg)
}

pub(crate) struct Instance<'a> {
    pub h: &'a CMatrix,
    pub y: &'a CVector,
    pub k: usize,
    pub truth_support: &'a [usize],
    pub noise_variance: f64,
    /// Prior variance per entry for LMMSE.
    pub signal_variance: f64,
    pub constellation: Option<&'a Constellation>,
}

struct Estimate {
    estimate: CVector,
    support: Vec<usize>,
}

impl Estimate {
    fn failed(n: usize) -> Self {
        Self {
            estimate: CVector::zeros(n),
            support: Vec::new(),
        }
    }
}

/// Runs one configured solver on one instance.
pub(crate) fn solve_single(spec: &SolverSpec, inst: &Instance, rng: &mut ChaCha8Rng) -> Result<RecoveryResult> {
    let cfg = configure(spec, inst.h, inst.y, inst.k, inst.noise_variance, rng)?;
    let dense = |v: CVector| {
        let support = extract_support(&v, cfg.support_tol);
        let mut r = RecoveryResult::new(v, support);
        r.residual_trace = vec![(inst.y - inst.h * &r.estimate).norm()];
        r
    };
    match spec.method {
        Method::SlicedGreedy => {
            let c = inst
                .constellation
                .ok_or_else(|| config_error("sliced-greedy needs a constellation-valued signal"))?;
            sliced_parallel_greedy(inst.h, inst.y, c, &cfg)
        }
        Method::L0 => {
            let tol = (inst.noise_variance > 0.0)
                .then(|| spec.residual_scale * (inst.h.nrows() as f64 * inst.noise_variance).sqrt());
            l0_exhaustive(inst.h, inst.y, cfg.sparsity_k.unwrap_or(inst.k), tol)
        }
        Method::MinNorm => min_norm_solve(inst.h, inst.y).map(dense),
        Method::Ls => ls_solve(inst.h, inst.y).map(dense),
        Method::Lmmse => lmmse_isotropic(
            inst.h,
            inst.y,
            inst.signal_variance,
            inst.noise_variance.max(1e-12 * inst.signal_variance),
        )
        .map(dense),
        Method::OracleLs => oracle_ls(inst.h, inst.y, inst.truth_support),
        Method::Somp | Method::Gsomp => Err(config_error(format!("{} needs multiple snapshots", spec.method))),
        other => {
            let solver = as_sparse(other).expect("remaining methods are sparse solvers");
            solver.solve(inst.h, inst.y, &cfg)
        }
    }
}

fn estimate(spec: &SolverSpec, inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Estimate> {
    // a numerical failure counts as a miss rather than aborting the sweep
    match solve_single(spec, inst, rng) {
        Ok(r) => Ok(Estimate {
            estimate: r.estimate,
            support: r.support,
        }),
        Err(Error::Config(msg)) => Err(Error::Config(msg)),
        Err(_) => Ok(Estimate::failed(inst.h.ncols())),
    }
}

/// State shared by all trials of an experiment.
pub(crate) enum Context {
    None,
    MmWave {
        model: MeasurementModel,
        lmmse: IsotropicLmmse,
    },
}

pub(crate) fn prepare(cfg: &ExperimentConfig) -> Result<Context> {
    if cfg.scenario != ScenarioId::MmWave {
        return Ok(Context::None);
    }
    let p = &cfg.params;
    let mm = MmWaveConfig::steered(
        p.usize("nt", 16)?,
        p.usize("nr", 16)?,
        p.usize("lt", 32)?,
        p.usize("lr", 32)?,
        p.usize("t", 16)?,
        p.usize("q", 16)?,
    );
    let model = build_mmwave_model(&mm)?;
    let lmmse = IsotropicLmmse::new(&model.h);
    Ok(Context::MmWave {
        model,
        lmmse,
    })
}

fn value_law(name: &str) -> Result<ValueLaw> {
    Ok(match name {
        "gaussian" => ValueLaw::UnitGaussian,
        "complex-gaussian" => ValueLaw::ComplexGaussian,
        other => {
            let kind: ConstellationKind = other.parse().map_err(|e: String| {
                config_error(format!("{e}; also valid: gaussian, complex-gaussian"))
            })?;
            ValueLaw::Constellation(Constellation::new(kind))
        }
    })
}

fn constellation(p: &Params, default: &str) -> Result<Constellation> {
    let kind: ConstellationKind = p.str("constellation", default)?.parse().map_err(config_error)?;
    Ok(Constellation::new(kind))
}

fn law_variance(law: &ValueLaw) -> f64 {
    match law {
        ValueLaw::Constellation(c) => c.average_energy(),
        _ => 1.0,
    }
}

/// Noise variance from `snr_db` when given, else `noise_variance`.
fn noise_for(p: &Params, clean: &CVector) -> Result<f64> {
    if p.contains("snr_db") {
        Ok(noise_variance_for_snr(clean, p.f64("snr_db", 0.0)?))
    } else {
        let v = p.f64("noise_variance", 0.0)?;
        if v < 0.0 {
            return Err(config_error("scenario.noise_variance must be nonnegative"));
        }
        Ok(v)
    }
}

fn observe(clean: &CVector, variance: f64, real: bool, rng: &mut ChaCha8Rng) -> CVector {
    let noise = if real {
        NoiseSpec::real(variance)
    } else {
        NoiseSpec::complex(variance)
    };
    clean + noise.sample(clean.len(), rng)
}

/// Runs every solver on `y = H s + v` and scores NMSE and exact support.
#[allow(clippy::too_many_arguments)]
fn vector_trial(
    cfg: &ExperimentConfig,
    p: &Params,
    model: &MeasurementModel,
    s: &CVector,
    support: &[usize],
    signal_variance: f64,
    metrics: &[Metric],
    constellation: Option<&Constellation>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Sample>> {
    let h = &model.h;
    let clean = h * s;
    let noise_variance = noise_for(p, &clean)?;
    let real = is_real(h.iter()) && is_real(s.iter());
    let y = observe(&clean, noise_variance, real, rng);
    let truth = model.synthesize(s);
    let inst = Instance {
        h,
        y: &y,
        k: support.len(),
        truth_support: support,
        noise_variance,
        signal_variance,
        constellation,
    };
    let mut out = Vec::new();
    for spec in &cfg.solvers {
        let e = estimate(spec, &inst, rng)?;
        for &metric in metrics {
            let value = match metric {
                Metric::NmseDb => nmse_db(&model.synthesize(&e.estimate), &truth)?,
                Metric::SupportProb => hit(&e.support, support),
                Metric::Ser => {
                    let c = constellation.ok_or_else(|| config_error("ser needs a constellation"))?;
                    ser_on_support(&e, c, s)
                }
                other => return Err(config_error(format!("metric {other} is not produced here"))),
            };
            out.push(sample(&spec.label, metric, value));
        }
    }
    Ok(out)
}

/// Slices the estimate on its support (zero elsewhere) and counts wrong
/// entries over the whole vector.
fn ser_on_support(e: &Estimate, c: &Constellation, truth: &CVector) -> f64 {
    let mut decided = CVector::zeros(truth.len());
    let sliced = slice(&e.estimate, c);
    for &i in &e.support {
        decided[i] = sliced[i];
    }
    symbol_errors(&decided, truth) as f64 / truth.len() as f64
}

fn metrics(p: &Params, default: &[&str]) -> Result<Vec<Metric>> {
    p.strings("metrics", default)?.iter().map(|s| s.parse()).collect()
}

fn gaussian_matrix(p: &Params, m: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<CMatrix> {
    let var = p.f64("entry_variance", 1.0 / m as f64)?;
    match p.str("matrix", "gaussian")? {
        "gaussian" => make_gaussian_matrix(m, n, var, rng),
        "complex-gaussian" => make_complex_gaussian_matrix(m, n, var, rng),
        "bernoulli" => make_bernoulli_matrix(m, n, rng),
        "partial-dft" => random_partial_dft_matrix(m, n, rng),
        other => Err(config_error(format!(
            "unknown matrix '{other}'; valid: gaussian, complex-gaussian, bernoulli, partial-dft"
        ))),
    }
}

fn sparse_signal(p: &Params, n: usize, k: usize, default_law: &str, rng: &mut ChaCha8Rng) -> Result<(CVector, Vec<usize>, ValueLaw)> {
    let law = value_law(p.str("values", default_law)?)?;
    let s = synthesize_sparse_vector(n, k, &law, rng)?;
    Ok((s.to_dense(), s.support().to_vec(), law))
}

fn gaussian_cs(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (m, n, k) = (p.usize("m", 100)?, p.usize("n", 256)?, p.usize("k", 10)?);
    let h = gaussian_matrix(p, m, n, rng)?;
    let (s, support, law) = sparse_signal(p, n, k, "gaussian", rng)?;
    let model = MeasurementModel {
        h,
        scenario: crate::wireless::Scenario::Angular,
        dictionary: None,
        index_map: crate::wireless::IndexMap::None,
    };
    let c = match &law {
        ValueLaw::Constellation(c) => Some(c.clone()),
        _ => None,
    };
    let sv = k as f64 * law_variance(&law) / n as f64;
    vector_trial(cfg, p, &model, &s, &support, sv, &metrics(p, &["nmse_db"])?, c.as_ref(), rng)
}

fn toeplitz_channel(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (len, n, k) = (p.usize("pilot_len", 32)?, p.usize("n", 64)?, p.usize("k", 4)?);
    let law = ValueLaw::Constellation(Constellation::qpsk());
    let pilot: Vec<C64> = (0..len).map(|_| law.draw(rng)).collect();
    let model = build_toeplitz_pilot_model(&pilot, n)?;
    let (s, support, _) = sparse_signal(p, n, k, "complex-gaussian", rng)?;
    vector_trial(cfg, p, &model, &s, &support, k as f64 / n as f64, &metrics(p, &["nmse_db"])?, None, rng)
}

fn ofdm_pilot(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let fft = p.usize("fft_size", 256)?;
    let (m, n, k) = (p.usize("m", 32)?, p.usize("n", 64)?, p.usize("k", 4)?);
    let mut positions = index::sample(rng, fft, m.min(fft)).into_vec();
    positions.sort_unstable();
    let law = ValueLaw::Constellation(Constellation::qpsk());
    let pilots = (0..positions.len()).map(|_| law.draw(rng)).collect();
    let model = build_ofdm_pilot_model(&OfdmConfig {
        fft_size: fft,
        data_positions: positions,
        pilots,
        channel_taps: n,
    })?;
    let (s, support, _) = sparse_signal(p, n, k, "complex-gaussian", rng)?;
    vector_trial(cfg, p, &model, &s, &support, k as f64 / n as f64, &metrics(p, &["nmse_db"])?, None, rng)
}

fn angular_channel(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (m, n, k) = (p.usize("m", 16)?, p.usize("n", 64)?, p.usize("k", 4)?);
    let a = make_complex_gaussian_matrix(m, n, 1.0 / m as f64, rng)?;
    let model = build_angular_model(&a)?;
    let (s, support, _) = sparse_signal(p, n, k, "complex-gaussian", rng)?;
    vector_trial(cfg, p, &model, &s, &support, k as f64 / n as f64, &metrics(p, &["nmse_db"])?, None, rng)
}

fn impulse_ofdm(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let n = p.usize("fft_size", 64)?;
    let q = p.usize("data_subcarriers", 12)?;
    let ic = ImpulseConfig {
        fft_size: n,
        data_positions: ImpulseConfig::evenly_spread(n, q),
        channel_taps: p.usize("channel_taps", 4)?,
        impulse_span: p.usize("impulse_span", 2)?,
        impulse_power_db: p.f64("impulse_power_db", 20.0)?,
        snr_db: p.f64("snr_db", 20.0)?,
        constellation: constellation(p, "qpsk")?,
    };
    let mut out = Vec::new();
    for (i, spec) in cfg.solvers.iter().enumerate() {
        let mut trial_rng = rng.clone();
        let mut scfg = spec.config.clone();
        if spec.sparsity == SparsityRule::Known {
            scfg.sparsity_k = Some(ic.impulse_span.max(1));
        }
        let solver = as_sparse(spec.method).expect("checked against the scenario");
        let o = impulse_cancel_pipeline(&ic, solver, &scfg, &mut trial_rng)?;
        out.push(sample(&spec.label, Metric::Ser, o.ser_with()));
        if i == 0 {
            out.push(sample("no-cancellation", Metric::Ser, o.ser_without()));
        }
    }
    Ok(out)
}

fn mwc(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (half, m, k) = (p.usize("half_bins", 50)?, p.usize("m", 20)?, p.usize("k", 3)?);
    let model = build_mwc_model(&MwcConfig::random(m, half, rng)?)?;
    let (s, support, _) = sparse_signal(p, 2 * half + 1, k, "complex-gaussian", rng)?;
    vector_trial(cfg, p, &model, &s, &support, 1.0, &metrics(p, &["support_prob"])?, None, rng)
}

fn aud(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (m, n, k) = (p.usize("m", 64)?, p.usize("n", 128)?, p.usize("k", 6)?);
    let threshold = p.f64("baseline_threshold", 0.5)?;
    let codebook = AudCodebook::gaussian(m, n, rng)?;
    let mut active = index::sample(rng, n, k).into_vec();
    active.sort_unstable();
    let gains = NoiseSpec::complex(1.0).sample(k, rng);
    let mut clean = CVector::zeros(m);
    for (&i, g) in active.iter().zip(gains.iter()) {
        clean += codebook.signatures().column(i) * (g * codebook.symbols()[i]);
    }
    let noise_variance = noise_for(p, &clean)?;
    let mut out = Vec::new();
    for (i, spec) in cfg.solvers.iter().enumerate() {
        let mut trial_rng = rng.clone();
        let scfg = configure(spec, codebook.signatures(), &clean, k, noise_variance, &mut trial_rng)?;
        let solver = as_sparse(spec.method).expect("checked against the scenario");
        let o = aud_pipeline(
            &codebook,
            &active,
            gains.as_slice(),
            noise_variance,
            solver,
            &scfg,
            &mut trial_rng,
        );
        let detected = o.as_ref().map(|o| o.detected.clone()).unwrap_or_default();
        out.push(sample(&spec.label, Metric::SupportProb, hit(&detected, &active)));
        if i == 0 {
            if let Ok(o) = &o {
                let base = correlation_threshold_detect(&codebook, &o.observation, threshold);
                out.push(sample("correlation-threshold", Metric::SupportProb, hit(&base, &active)));
            }
        }
    }
    Ok(out)
}

fn localization(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (w, h, aps) = (p.usize("width", 8)?, p.usize("height", 8)?, p.usize("aps", 10)?);
    let k = p.usize("k", 2)?;
    let sep = p.f64("min_separation", 5.0)?;
    let sigma_db = p.f64("sigma_db", 1.0)?;
    let map = RssMap {
        path_loss_exponent: p.f64("path_loss_exponent", 6.0)?,
        ..RssMap::staggered(w, h, aps)
    };
    let model = build_localization_model(&map)?;
    let cells = map.cells();
    let mut targets = Vec::with_capacity(k);
    let mut attempts = 0;
    while targets.len() < k {
        attempts += 1;
        if attempts > 100_000 {
            return Err(config_error("cannot place targets with the requested separation"));
        }
        let c = rng.random_range(0..cells);
        if targets.iter().all(|&t| map.cell_distance(t, c) >= sep) {
            targets.push(c);
        }
    }
    targets.sort_unstable();
    let y = observe_rss(&model, &targets, sigma_db, rng)?;
    // relative RSS: divide each access point's row by its reading
    let hw = CMatrix::from_fn(model.rows(), model.cols(), |i, j| model.h[(i, j)] / y[i].re);
    let ones = CVector::from_element(model.rows(), C64::new(1.0, 0.0));
    let mut out = Vec::new();
    for spec in &cfg.solvers {
        let inst = Instance {
            h: &hw,
            y: &ones,
            k,
            truth_support: &targets,
            noise_variance: 0.0,
            signal_variance: 1.0,
            constellation: None,
        };
        let e = estimate(spec, &inst, rng)?;
        out.push(sample(&spec.label, Metric::SupportProb, hit(&e.support, &targets)));
    }
    Ok(out)
}

fn mmwave(cfg: &ExperimentConfig, ctx: &Context, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let Context::MmWave { model, lmmse, .. } = ctx else {
        unreachable!("mmwave context is prepared up front")
    };
    let k = p.usize("k", 3)?;
    let n = model.cols();
    let (s, support, _) = sparse_signal(p, n, k, "complex-gaussian", rng)?;
    let clean = &model.h * &s;
    let noise_variance = noise_for(p, &clean)?;
    let y = observe(&clean, noise_variance, false, rng);
    let inst = Instance {
        h: &model.h,
        y: &y,
        k,
        truth_support: &support,
        noise_variance,
        signal_variance: k as f64 / n as f64,
        constellation: None,
    };
    let mut out = Vec::new();
    for spec in &cfg.solvers {
        let e = estimate(spec, &inst, rng)?;
        out.push(sample(&spec.label, Metric::SupportProb, hit(&e.support, &support)));
    }
    let base = lmmse_top_k(lmmse, &y, k, k as f64 / n as f64, noise_variance)?;
    out.push(sample("lmmse-top-k", Metric::SupportProb, hit(&base, &support)));
    Ok(out)
}

fn error_detection(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let n = p.usize("n", 16)?;
    let m = p.usize("m", n)?;
    if m < n {
        return Err(config_error("error-detection needs m >= n"));
    }
    let c = constellation(p, "qpsk")?;
    let h = make_complex_gaussian_matrix(m, n, 1.0 / n as f64, rng)?;
    let law = ValueLaw::Constellation(c.clone());
    let s = CVector::from_fn(n, |_, _| law.draw(rng));
    let noise_variance = c.average_energy() / 10f64.powf(p.f64("snr_db", 10.0)? / 10.0);
    let y = observe(&(&h * &s), noise_variance, false, rng);
    let baseline = lmmse_detect(&h, &y, &c, noise_variance)?;
    let residual = &y - &h * &baseline;
    let wrong: Vec<usize> = (0..n).filter(|&i| (baseline[i] - s[i]).norm() > 1e-9).collect();
    let mut out = vec![sample(
        "lmmse",
        Metric::Ser,
        symbol_errors(&baseline, &s) as f64 / n as f64,
    )];
    for spec in &cfg.solvers {
        let inst = Instance {
            h: &h,
            y: &residual,
            k: wrong.len().max(1),
            truth_support: &wrong,
            noise_variance,
            signal_variance: 1.0,
            constellation: None,
        };
        let e = estimate(spec, &inst, rng)?;
        let corrected = slice(&(&baseline + &e.estimate), &c);
        out.push(sample(&spec.label, Metric::Ser, symbol_errors(&corrected, &s) as f64 / n as f64));
    }
    Ok(out)
}

fn sliced_qam(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (m, n, k) = (p.usize("m", 12)?, p.usize("n", 24)?, p.usize("k", 5)?);
    let c = constellation(p, "qam16")?;
    let h = gaussian_matrix(p, m, n, rng)?;
    let s = synthesize_sparse_vector(n, k, &ValueLaw::Constellation(c.clone()), rng)?;
    let model = MeasurementModel {
        h,
        scenario: crate::wireless::Scenario::Angular,
        dictionary: None,
        index_map: crate::wireless::IndexMap::None,
    };
    let support = s.support().to_vec();
    vector_trial(
        cfg,
        p,
        &model,
        &s.to_dense(),
        &support,
        k as f64 * c.average_energy() / n as f64,
        &metrics(p, &["ser"])?,
        Some(&c),
        rng,
    )
}

fn mmv(cfg: &ExperimentConfig, p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (m, n, k) = (p.usize("m", 32)?, p.usize("n", 64)?, p.usize("k", 8)?);
    let snapshots = p.usize("snapshots", 1)?.max(1);
    let distinct = p.bool("distinct", false)?;
    let var = p.f64("entry_variance", 1.0 / m as f64)?;
    let mut support = index::sample(rng, n, k).into_vec();
    support.sort_unstable();
    let matrices: Vec<CMatrix> = if distinct {
        (0..snapshots)
            .map(|_| make_complex_gaussian_matrix(m, n, var, rng))
            .collect::<Result<_>>()?
    } else {
        vec![make_complex_gaussian_matrix(m, n, var, rng)?]
    };
    let mut observations = Vec::with_capacity(snapshots);
    for l in 0..snapshots {
        let values = NoiseSpec::complex(1.0).sample(k, rng);
        let s = crate::linalg::scatter(n, &support, values.as_slice());
        let h = &matrices[if distinct { l } else { 0 }];
        let clean = h * s;
        let nv = noise_for(p, &clean)?;
        observations.push(observe(&clean, nv, false, rng));
    }
    let first_h = matrices[0].clone();
    let problem = if distinct {
        MmvProblem::distinct(matrices, observations.clone())?
    } else {
        MmvProblem::shared(first_h.clone(), observations.clone())?
    };
    let mut out = Vec::new();
    for spec in &cfg.solvers {
        let mut scfg = spec.config.clone();
        if spec.sparsity == SparsityRule::Known {
            scfg.sparsity_k = Some(k);
        }
        let found = match spec.method {
            Method::Omp => omp(&first_h, &observations[0], &scfg).map(|r| r.support),
            Method::Somp if !distinct => somp(&problem, &scfg).map(|r| r.support),
            Method::Somp | Method::Gsomp => gsomp_distinct(&problem, &scfg).map(|r| r.support),
            _ => unreachable!("checked against the scenario"),
        };
        let found = match found {
            Ok(f) => f,
            Err(Error::Config(msg)) => return Err(Error::Config(msg)),
            Err(_) => Vec::new(),
        };
        out.push(sample(&spec.label, Metric::SupportProb, hit(&found, &support)));
    }
    Ok(out)
}

fn clustered_dictionary(p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let n = p.usize("n", 100)?;
    let k = p.usize("k", 30)?;
    let atoms = p.usize("atoms", 2 * n)?;
    let channel = ClusteredChannel {
        paths_per_cluster: p.usize("paths_per_cluster", 10)?,
        angular_spread_deg: p.f64("angular_spread_deg", 2.0)?,
        ..ClusteredChannel::six_clusters(n)
    };
    let x = channel.generate(p.usize("l", 500)?, rng)?;
    let ortho = make_orthogonal_dft(n)?;
    let over = make_overcomplete_dft(n, atoms)?;
    let learned = refine_dictionary(&x, &over, k, p.usize("rounds", 10)?)?.dictionary;
    Ok(vec![
        sample("orthogonal-dft", Metric::Mismatch, mismatch_error(&ortho, &x, k.min(n))?),
        sample("overcomplete-dft", Metric::Mismatch, mismatch_error(&over, &x, k)?),
        sample("learned", Metric::Mismatch, mismatch_error(&learned, &x, k)?),
    ])
}

fn cv_sparsity(p: &Params, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let (m, n, k) = (p.usize("m", 100)?, p.usize("n", 256)?, p.usize("k", 5)?);
    let h = gaussian_matrix(p, m, n, rng)?;
    let (s, _, law) = sparse_signal(p, n, k, "gaussian", rng)?;
    let clean = &h * &s;
    let nv = noise_for(p, &clean)?;
    let y = observe(&clean, nv, matches!(law, ValueLaw::UnitGaussian), rng);
    let split = CvSplit::random(m, p.f64("train_fraction", 0.8)?, rng)?;
    let k_max = p.usize("k_max", 4 * k.max(1))?;
    let cv = estimate_k_cv(&h, &y, &split, k_max)?;
    let relative = cv.validation_errors[cv.k_hat] / cv.validation_errors[0].max(f64::MIN_POSITIVE);
    let eps = p.f64("residual_scale", 1.0)? * (m as f64 * nv).sqrt();
    let by_residual = estimate_k_residual(&h, &y, eps.max(1e-9 * y.norm()))?;
    Ok(vec![
        sample("cv", Metric::SupportProb, f64::from(u8::from(cv.k_hat == k))),
        sample("cv", Metric::ValidationError, relative),
        sample("residual", Metric::SupportProb, f64::from(u8::from(by_residual == k))),
    ])
}

pub(crate) fn run_trial(
    cfg: &ExperimentConfig,
    ctx: &Context,
    p: &Params,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Sample>> {
    use ScenarioId::*;
    match cfg.scenario {
        GaussianCs => gaussian_cs(cfg, p, rng),
        ToeplitzChannel => toeplitz_channel(cfg, p, rng),
        OfdmPilot => ofdm_pilot(cfg, p, rng),
        AngularChannel => angular_channel(cfg, p, rng),
        ImpulseOfdm => impulse_ofdm(cfg, p, rng),
        Mwc => mwc(cfg, p, rng),
        Aud => aud(cfg, p, rng),
        Localization => localization(cfg, p, rng),
        MmWave => mmwave(cfg, ctx, p, rng),
        ErrorDetection => error_detection(cfg, p, rng),
        SlicedQam => sliced_qam(cfg, p, rng),
        Mmv => mmv(cfg, p, rng),
        ClusteredDictionary => clustered_dictionary(p, rng),
        CvSparsity => cv_sparsity(p, rng),
    }
}
