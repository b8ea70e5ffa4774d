//! Online stochastic variational EM.
//!
//! Every training pair runs a local step (the optimal sense posterior γ
//! given the current globals) followed by a global step: the sense counts
//! move toward `n_w γ` with rate λ and the vectors take one ascent step of
//! size ρ on `Σ_k γ_k Σ_j log p(y_j | w, k)`.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use crate::corpus::{context_bounds, Vocabulary};
use crate::error::{Error, Result};
use crate::huffman::HuffmanCode;
use crate::math::{dot, exp_normalize, log_sigmoid, log_sum_exp, Scalar};
use crate::softmax::branch_coefficient;
use crate::model::{expected_log_pi_into, SenseModel, SensePosterior};

/// Senses whose responsibility falls below this skip the vector update.
pub const GAMMA_SKIP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    /// Context width C; the window covers C/2 words on each side.
    pub window: usize,
    pub epochs: u32,
    /// Initial vector learning rate ρ₀.
    pub rho0: f64,
    /// Initial count learning rate λ₀.
    pub lambda0: f64,
    /// Floor applied to both decayed rates.
    pub min_rate: f64,
    pub senses: usize,
    pub dim: usize,
    pub alpha: f64,
    pub min_count: u64,
    pub seed: u64,
    pub workers: usize,
    /// Print throughput, rate and average ELBO to stderr.
    pub progress: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            window: 10,
            epochs: 1,
            rho0: 0.025,
            lambda0: 0.025,
            min_rate: 0.025 * 1e-4,
            senses: 30,
            dim: 300,
            alpha: 0.15,
            min_count: 20,
            seed: 1,
            workers: 1,
            progress: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.window < 2 || !self.window.is_multiple_of(2) {
            return bad(format!("window must be even and >= 2, got {}", self.window));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.rho0 > 0.0 && self.rho0 <= 1.0) {
            return bad(format!("rho0 must lie in (0, 1], got {}", self.rho0));
        }
        if !(self.lambda0 > 0.0 && self.lambda0 <= 1.0) {
            return bad(format!("lambda0 must lie in (0, 1], got {}", self.lambda0));
        }
        if !(self.min_rate >= 0.0 && self.min_rate <= 1.0) {
            return bad(format!("min_rate must lie in [0, 1], got {}", self.min_rate));
        }
        if self.senses == 0 {
            return bad("senses must be at least 1".into());
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}

/// Linearly decayed rate `max(floor, rate0 · (1 − i / total))`.
pub fn learning_rate(rate0: f64, floor: f64, i: u64, total: u64) -> f64 {
    let frac = if total == 0 { 1.0 } else { i as f64 / total as f64 };
    (rate0 * (1.0 - frac)).max(floor)
}

/// Summary of a finished run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    pub pairs: u64,
    /// Mean of the per-pair optimal local ELBO over the run.
    pub mean_elbo: f64,
}

/// Parameter access used by the pair kernel. The single-worker store is the
/// model itself; the parallel store goes through relaxed atomics.
pub(crate) trait ParamStore<F: Scalar> {
    fn load_in(&self, word: u32, dst: &mut [F]);
    fn load_out(&self, node: u32, dst: &mut [F]);
    fn load_counts(&self, word: u32, dst: &mut [f64]);
    /// `counts[word][k] += λ (freq γ_k − counts[word][k])` as one indivisible
    /// update, so the row sum stays at `freq`.
    fn blend_counts(&mut self, word: u32, freq: f64, gamma: &[f64], lambda: f64);
    /// `in[word][sense] += scale · delta`
    fn add_in(&mut self, word: u32, sense: usize, scale: f64, delta: &[f64]);
    /// `out[node] += scale · delta`
    fn add_out(&mut self, node: u32, scale: f64, delta: &[f64]);
}

impl<F: Scalar> ParamStore<F> for SenseModel<F> {
    fn load_in(&self, word: u32, dst: &mut [F]) {
        let t = SenseModel::senses(self);
        let d = SenseModel::dim(self);
        let off = word as usize * t * d;
        dst.copy_from_slice(&self.input()[off..off + t * d]);
    }

    fn load_out(&self, node: u32, dst: &mut [F]) {
        dst.copy_from_slice(self.out_vec(node));
    }

    fn load_counts(&self, word: u32, dst: &mut [f64]) {
        dst.copy_from_slice(self.word_counts(word));
    }

    fn blend_counts(&mut self, word: u32, freq: f64, gamma: &[f64], lambda: f64) {
        for (c, &g) in self.word_counts_mut(word).iter_mut().zip(gamma) {
            *c += lambda * (freq * g - *c);
        }
    }

    fn add_in(&mut self, word: u32, sense: usize, scale: f64, delta: &[f64]) {
        for (x, &g) in self.in_vec_mut(word, sense).iter_mut().zip(delta) {
            *x = F::from_f64(x.to_f64() + scale * g);
        }
    }

    fn add_out(&mut self, node: u32, scale: f64, delta: &[f64]) {
        for (x, &g) in self.out_vec_mut(node).iter_mut().zip(delta) {
            *x = F::from_f64(x.to_f64() + scale * g);
        }
    }
}

/// Scratch state for one training pair.
pub(crate) struct PairKernel<F: Scalar> {
    dim: usize,
    senses: usize,
    /// Flattened `(node, sign)` over the paths of every context word.
    path: Vec<(u32, i8)>,
    outs: Vec<F>,
    ins: Vec<F>,
    counts: Vec<f64>,
    prior: Vec<f64>,
    loglik: Vec<f64>,
    /// `coef[k * path.len() + i]` = ∂ log σ / ∂ score for sense k, node i.
    coef: Vec<f64>,
    gamma: Vec<f64>,
    in_grad: Vec<f64>,
    delta: Vec<f64>,
}

impl<F: Scalar> PairKernel<F> {
    pub(crate) fn new(dim: usize, senses: usize) -> Self {
        PairKernel {
            dim,
            senses,
            path: Vec::new(),
            outs: Vec::new(),
            ins: vec![F::ZERO; senses * dim],
            counts: vec![0.0; senses],
            prior: vec![0.0; senses],
            loglik: vec![0.0; senses],
            coef: Vec::new(),
            gamma: vec![0.0; senses],
            in_grad: vec![0.0; senses * dim],
            delta: vec![0.0; dim],
        }
    }

    /// Snapshot the parameters touched by `(word, context)` and evaluate the
    /// prior term and per-sense context log-likelihoods.
    pub(crate) fn load<S, I>(&mut self, store: &S, code: &HuffmanCode, alpha: f64, word: u32, context: I)
    where
        S: ParamStore<F> + ?Sized,
        I: IntoIterator<Item = u32>,
    {
        let (d, t) = (self.dim, self.senses);
        self.path.clear();
        for y in context {
            self.path.extend(code.path(y).iter());
        }
        let m = self.path.len();
        self.outs.resize(m * d, F::ZERO);
        for (i, &(n, _)) in self.path.iter().enumerate() {
            store.load_out(n, &mut self.outs[i * d..(i + 1) * d]);
        }
        store.load_in(word, &mut self.ins);
        store.load_counts(word, &mut self.counts);
        expected_log_pi_into(&self.counts, alpha, &mut self.prior);

        self.coef.resize(t * m, 0.0);
        self.loglik.iter_mut().for_each(|x| *x = 0.0);
        for (i, &(_, sign)) in self.path.iter().enumerate() {
            let out = &self.outs[i * d..(i + 1) * d];
            for k in 0..t {
                let s = dot(&self.ins[k * d..(k + 1) * d], out);
                self.loglik[k] += log_sigmoid(sign as f64 * s);
                self.coef[k * m + i] = branch_coefficient(sign, s);
            }
        }
    }

    /// Optimal γ for the loaded pair, left in `self.gamma`. Returns the local
    /// ELBO at that optimum (the log normalizer).
    pub(crate) fn posterior(&mut self) -> f64 {
        for k in 0..self.senses {
            self.gamma[k] = self.prior[k] + self.loglik[k];
        }
        let elbo = log_sum_exp(&self.gamma);
        exp_normalize(&mut self.gamma);
        elbo
    }

    pub(crate) fn elbo_at(&self, gamma: &[f64]) -> f64 {
        gamma
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                if g > 0.0 {
                    g * (self.prior[k] + self.loglik[k] - g.ln())
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Apply the global step with responsibilities `gamma` to the loaded
    /// pair: counts first, then all vector updates computed from the
    /// snapshot taken by `load`.
    pub(crate) fn apply<S>(&mut self, store: &mut S, word: u32, freq: f64, gamma: &[f64], rho: f64, lambda: f64)
    where
        S: ParamStore<F> + ?Sized,
    {
        let (d, t, m) = (self.dim, self.senses, self.path.len());
        if lambda != 0.0 {
            store.blend_counts(word, freq, gamma, lambda);
        }
        if m == 0 {
            return;
        }

        for k in 0..t {
            if gamma[k] < GAMMA_SKIP {
                continue;
            }
            let grad = &mut self.in_grad[k * d..(k + 1) * d];
            grad.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..m {
                let c = self.coef[k * m + i];
                for (g, &o) in grad.iter_mut().zip(&self.outs[i * d..(i + 1) * d]) {
                    *g += c * o.to_f64();
                }
            }
        }

        for i in 0..m {
            self.delta.iter_mut().for_each(|x| *x = 0.0);
            for k in 0..t {
                if gamma[k] < GAMMA_SKIP {
                    continue;
                }
                let c = gamma[k] * self.coef[k * m + i];
                for (x, &v) in self.delta.iter_mut().zip(&self.ins[k * d..(k + 1) * d]) {
                    *x += c * v.to_f64();
                }
            }
            store.add_out(self.path[i].0, rho, &self.delta);
        }

        for k in 0..t {
            if gamma[k] < GAMMA_SKIP {
                continue;
            }
            store.add_in(word, k, rho * gamma[k], &self.in_grad[k * d..(k + 1) * d]);
        }
    }

    pub(crate) fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// Optimal local posterior `q(z)` for input `word` with the given context.
pub fn local_step<F: Scalar>(model: &SenseModel<F>, word: u32, context: &[u32]) -> SensePosterior {
    let mut k = PairKernel::new(model.dim(), model.senses());
    k.load(model, model.code(), model.alpha(), word, context.iter().copied());
    k.posterior();
    SensePosterior::new_unchecked(k.gamma().to_vec())
}

/// Local ELBO `Σ_k γ_k (E[log π_k] + Σ_j log p(y_j | w, k) − log γ_k)`.
pub fn local_elbo<F: Scalar>(model: &SenseModel<F>, word: u32, context: &[u32], gamma: &SensePosterior) -> f64 {
    let mut k = PairKernel::new(model.dim(), model.senses());
    k.load(model, model.code(), model.alpha(), word, context.iter().copied());
    k.elbo_at(gamma.probs())
}

/// Global step for one pair with fixed responsibilities `gamma`.
pub fn global_step<F: Scalar>(
    model: &mut SenseModel<F>,
    word: u32,
    context: &[u32],
    gamma: &SensePosterior,
    rho: f64,
    lambda: f64,
) {
    let mut k = PairKernel::new(model.dim(), model.senses());
    let code = model.code().clone();
    k.load(model, &code, model.alpha(), word, context.iter().copied());
    let freq = model.vocab().freq(word) as f64;
    k.apply(model, word, freq, gamma.probs(), rho, lambda);
}

/// Build vocabulary and tree from `tokens`, initialize, and train.
pub fn train<'a, F, I>(tokens: I, config: &TrainingConfig) -> Result<SenseModel<F>>
where
    F: Scalar,
    I: IntoIterator<Item = &'a str>,
    I::IntoIter: Clone,
{
    config.validate()?;
    let tokens = tokens.into_iter();
    let vocab = Vocabulary::build(tokens.clone(), config.min_count)?;
    let ids = vocab.encode(tokens);
    let code = HuffmanCode::build(vocab.freqs())?;
    let mut model = SenseModel::init(vocab, code, config.dim, config.senses, config.alpha, config.seed)?;
    train_model(&mut model, &ids, config)?;
    Ok(model)
}

/// Run `config.epochs` passes over `ids` on an existing model.
pub fn train_model<F: Scalar>(model: &mut SenseModel<F>, ids: &[u32], config: &TrainingConfig) -> Result<TrainStats> {
    config.validate()?;
    if config.senses != model.senses() || config.dim != model.dim() {
        return Err(Error::InvalidConfig("config shape differs from the model".into()));
    }
    if let Some(&bad) = ids.iter().find(|&&w| w as usize >= model.num_words()) {
        return Err(Error::OutOfVocabulary(format!("word id {bad}")));
    }
    if config.workers > 1 {
        return hogwild::train_parallel(model, ids, config);
    }

    let total = ids.len() as u64 * config.epochs as u64;
    let code = model.code().clone();
    let freqs: Vec<f64> = model.vocab().freqs().iter().map(|&f| f as f64).collect();
    let alpha = model.alpha();
    let mut kernel = PairKernel::new(model.dim(), model.senses());
    let mut progress = Progress::new(config.progress, total);
    let mut elbo_sum = 0.0;
    let mut step = 0u64;

    for _ in 0..config.epochs {
        for pos in 0..ids.len() {
            let w = ids[pos];
            let (left, right) = context_bounds(ids.len(), pos, config.window);
            let context = ids[left].iter().chain(&ids[right]).copied();
            let rho = learning_rate(config.rho0, config.min_rate, step, total);
            let lambda = learning_rate(config.lambda0, config.min_rate, step, total);

            kernel.load(model, &code, alpha, w, context);
            let elbo = kernel.posterior();
            if !elbo.is_finite() || kernel.gamma().iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite { step, word: w });
            }
            let gamma = std::mem::take(&mut kernel.gamma);
            kernel.apply(model, w, freqs[w as usize], &gamma, rho, lambda);
            kernel.gamma = gamma;

            elbo_sum += elbo;
            step += 1;
            progress.tick(step, rho, elbo);
        }
        if let Some((word, _)) = model.find_non_finite() {
            return Err(Error::NonFinite { step, word });
        }
    }
    progress.finish(step);
    Ok(TrainStats {
        pairs: step,
        mean_elbo: if step > 0 { elbo_sum / step as f64 } else { 0.0 },
    })
}

struct Progress {
    enabled: bool,
    total: u64,
    start: Instant,
    last: u64,
    elbo_acc: f64,
    elbo_n: u64,
}

const REPORT_EVERY: u64 = 100_000;

impl Progress {
    fn new(enabled: bool, total: u64) -> Self {
        Progress {
            enabled,
            total,
            start: Instant::now(),
            last: 0,
            elbo_acc: 0.0,
            elbo_n: 0,
        }
    }

    #[inline]
    fn tick(&mut self, step: u64, rate: f64, elbo: f64) {
        if !self.enabled {
            return;
        }
        self.elbo_acc += elbo;
        self.elbo_n += 1;
        if step - self.last >= REPORT_EVERY {
            self.report(step, rate);
        }
    }

    fn report(&mut self, step: u64, rate: f64) {
        let secs = self.start.elapsed().as_secs_f64().max(1e-9);
        eprintln!(
            "{:6.2}%  {:>10.0} pairs/s  rate {:.6}  elbo {:.4}",
            100.0 * step as f64 / self.total.max(1) as f64,
            step as f64 / secs,
            rate,
            self.elbo_acc / self.elbo_n.max(1) as f64,
        );
        self.last = step;
        self.elbo_acc = 0.0;
        self.elbo_n = 0;
    }

    fn finish(&mut self, step: u64) {
        if self.enabled {
            let secs = self.start.elapsed().as_secs_f64();
            eprintln!("trained {step} pairs in {secs:.1}s");
        }
    }
}

mod hogwild {
    //! Lock-free parallel training: workers own contiguous chunks of the
    //! corpus and update shared vectors with relaxed atomic loads and
    //! stores. Concurrent vector updates may be lost, so results depend on
    //! thread scheduling.

    use super::*;

    struct SharedStore<'a, F: Scalar> {
        input: *mut F,
        output: *mut F,
        counts: *mut f64,
        locks: &'a [AtomicBool],
        dim: usize,
        senses: usize,
        _marker: std::marker::PhantomData<&'a mut F>,
    }

    /// Count rows are guarded by striped spin locks; vectors are not.
    const LOCK_STRIPES: usize = 1024;

    // Every access through the raw pointers is a relaxed atomic operation.
    unsafe impl<F: Scalar> Send for SharedStore<'_, F> {}
    unsafe impl<F: Scalar> Sync for SharedStore<'_, F> {}

    impl<F: Scalar> SharedStore<'_, F> {
        fn handle(&self) -> Self {
            SharedStore { ..*self }
        }

        fn with_row<R>(&self, word: u32, f: impl FnOnce() -> R) -> R {
            let lock = &self.locks[word as usize % LOCK_STRIPES];
            while lock
                .compare_exchange_weak(false, true, Ordering::Acquire, Ordering::Relaxed)
                .is_err()
            {
                std::hint::spin_loop();
            }
            let r = f();
            lock.store(false, Ordering::Release);
            r
        }
    }

    impl<F: Scalar> ParamStore<F> for SharedStore<'_, F> {
        fn load_in(&self, word: u32, dst: &mut [F]) {
            let off = word as usize * self.senses * self.dim;
            for (i, x) in dst.iter_mut().enumerate() {
                *x = unsafe { F::load_relaxed(self.input.add(off + i)) };
            }
        }

        fn load_out(&self, node: u32, dst: &mut [F]) {
            let off = node as usize * self.dim;
            for (i, x) in dst.iter_mut().enumerate() {
                *x = unsafe { F::load_relaxed(self.output.add(off + i)) };
            }
        }

        fn load_counts(&self, word: u32, dst: &mut [f64]) {
            let off = word as usize * self.senses;
            self.with_row(word, || {
                for (i, x) in dst.iter_mut().enumerate() {
                    *x = unsafe { f64::load_relaxed(self.counts.add(off + i)) };
                }
            });
        }

        fn blend_counts(&mut self, word: u32, freq: f64, gamma: &[f64], lambda: f64) {
            let off = word as usize * self.senses;
            self.with_row(word, || {
                for (i, &g) in gamma.iter().enumerate() {
                    unsafe {
                        let p = self.counts.add(off + i);
                        let c = f64::load_relaxed(p);
                        f64::store_relaxed(p, c + lambda * (freq * g - c));
                    }
                }
            });
        }

        fn add_in(&mut self, word: u32, sense: usize, scale: f64, delta: &[f64]) {
            let off = (word as usize * self.senses + sense) * self.dim;
            for (i, &g) in delta.iter().enumerate() {
                unsafe {
                    let p = self.input.add(off + i);
                    F::store_relaxed(p, F::from_f64(F::load_relaxed(p).to_f64() + scale * g));
                }
            }
        }

        fn add_out(&mut self, node: u32, scale: f64, delta: &[f64]) {
            let off = node as usize * self.dim;
            for (i, &g) in delta.iter().enumerate() {
                unsafe {
                    let p = self.output.add(off + i);
                    F::store_relaxed(p, F::from_f64(F::load_relaxed(p).to_f64() + scale * g));
                }
            }
        }
    }

    pub(super) fn train_parallel<F: Scalar>(
        model: &mut SenseModel<F>,
        ids: &[u32],
        config: &TrainingConfig,
    ) -> Result<TrainStats> {
        let total = ids.len() as u64 * config.epochs as u64;
        let code = model.code().clone();
        let freqs: Vec<f64> = model.vocab().freqs().iter().map(|&f| f as f64).collect();
        let (alpha, dim, senses) = (model.alpha(), model.dim(), model.senses());
        let workers = config.workers.min(ids.len().max(1));
        let chunk = ids.len().div_ceil(workers).max(1);

        let done = AtomicU64::new(0);
        let failed = AtomicBool::new(false);
        let elbo_bits = AtomicU64::new(0f64.to_bits());
        let start = Instant::now();

        let locks: Vec<AtomicBool> = (0..LOCK_STRIPES).map(|_| AtomicBool::new(false)).collect();
        let (input, output, counts) = model.blocks_mut();
        let shared = SharedStore {
            input: input.as_mut_ptr(),
            output: output.as_mut_ptr(),
            counts: counts.as_mut_ptr(),
            locks: &locks,
            dim,
            senses,
            _marker: std::marker::PhantomData,
        };

        for _ in 0..config.epochs {
            std::thread::scope(|scope| {
                for c in 0..workers {
                    let lo = c * chunk;
                    let hi = ((c + 1) * chunk).min(ids.len());
                    let mut store = shared.handle();
                    let (code, freqs, done, failed, elbo_bits) = (&code, &freqs, &done, &failed, &elbo_bits);
                    scope.spawn(move || {
                        let mut kernel = PairKernel::<F>::new(dim, senses);
                        let mut local_elbo = 0.0;
                        let mut since = 0u64;
                        for pos in lo..hi {
                            let step = done.load(Ordering::Relaxed);
                            let rho = learning_rate(config.rho0, config.min_rate, step, total);
                            let lambda = learning_rate(config.lambda0, config.min_rate, step, total);
                            let w = ids[pos];
                            let (left, right) = context_bounds(ids.len(), pos, config.window);
                            kernel.load(&store, code, alpha, w, ids[left].iter().chain(&ids[right]).copied());
                            let elbo = kernel.posterior();
                            if !elbo.is_finite() {
                                failed.store(true, Ordering::Relaxed);
                                return;
                            }
                            let gamma = std::mem::take(&mut kernel.gamma);
                            kernel.apply(&mut store, w, freqs[w as usize], &gamma, rho, lambda);
                            kernel.gamma = gamma;
                            local_elbo += elbo;
                            since += 1;
                            if since == 1024 || pos + 1 == hi {
                                let prev = done.fetch_add(since, Ordering::Relaxed);
                                let now = prev + since;
                                since = 0;
                                if config.progress && prev / REPORT_EVERY != now / REPORT_EVERY {
                                    let secs = start.elapsed().as_secs_f64().max(1e-9);
                                    eprintln!(
                                        "{:6.2}%  {:>10.0} pairs/s  rate {:.6}",
                                        100.0 * prev as f64 / total.max(1) as f64,
                                        prev as f64 / secs,
                                        rho
                                    );
                                }
                            }
                        }
                        let mut cur = elbo_bits.load(Ordering::Relaxed);
                        loop {
                            let next = (f64::from_bits(cur) + local_elbo).to_bits();
                            match elbo_bits.compare_exchange(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
                                Ok(_) => break,
                                Err(v) => cur = v,
                            }
                        }
                    });
                }
            });
            if failed.load(Ordering::Relaxed) {
                break;
            }
        }

        let step = done.load(Ordering::Relaxed);
        if failed.load(Ordering::Relaxed) {
            return Err(Error::NonFinite { step, word: u32::MAX });
        }
        if let Some((word, _)) = model.find_non_finite() {
            return Err(Error::NonFinite { step, word });
        }
        if config.progress {
            eprintln!("trained {step} pairs in {:.1}s", start.elapsed().as_secs_f64());
        }
        Ok(TrainStats {
            pairs: step,
            mean_elbo: f64::from_bits(elbo_bits.load(Ordering::Relaxed)) / step.max(1) as f64,
        })
    }
}
