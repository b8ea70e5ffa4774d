//! C ABI over the `adagram` library.
//!
//! Every function returns an [`AdgStatus`]; results are written through out
//! pointers. On failure a thread-local message is available from
//! [`adg_last_error`]. Models are opaque handles created by
//! [`adg_model_load`] or [`adg_train_file`] and released with
//! [`adg_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use adagram::predict::{disambiguate, nearest_neighbors};
use adagram::{corpus, wsi, Error, SenseModel, TrainingConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    CorruptModel = 4,
    OutOfVocabulary = 5,
    InvalidArgument = 6,
    BufferTooSmall = 7,
    TrainingFailed = 8,
    Panic = 9,
}

/// Opaque trained model.
pub struct AdgModel {
    inner: SenseModel<f32>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct AdgTrainConfig {
    pub dim: usize,
    pub senses: usize,
    pub alpha: f64,
    pub window: usize,
    pub min_count: u64,
    pub epochs: u32,
    pub workers: usize,
    pub seed: u64,
    pub rho0: f64,
    pub lambda0: f64,
    pub min_rate: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct AdgNeighbor {
    pub word_id: u32,
    pub sense: u32,
    pub cosine: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(AdgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) => AdgStatus::Io,
            Error::CorruptModel(_) | Error::UnsupportedVersion(_) | Error::ChecksumMismatch { .. } => AdgStatus::CorruptModel,
            Error::OutOfVocabulary(_) => AdgStatus::OutOfVocabulary,
            Error::NonFinite { .. } | Error::EmptyVocabulary { .. } | Error::VocabularyTooSmall(_) => AdgStatus::TrainingFailed,
            _ => AdgStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn fail<T>(status: AdgStatus, msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AdgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AdgStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AdgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return fail(AdgStatus::NullPointer, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(AdgStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn model_ref<'a>(m: *const AdgModel) -> Result<&'a SenseModel<f32>, Fail> {
    if m.is_null() {
        return fail(AdgStatus::NullPointer, "model is null");
    }
    Ok(&(*m).inner)
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return fail(AdgStatus::NullPointer, format!("{name} is null"));
    }
    if len < need {
        return fail(AdgStatus::BufferTooSmall, format!("{name} holds {len}, need {need}"));
    }
    Ok(slice::from_raw_parts_mut(p, need))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(AdgStatus::NullPointer, format!("{name} is null"));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn check_word(m: &SenseModel<f32>, word_id: u32) -> Result<(), Fail> {
    if (word_id as usize) < m.num_words() {
        Ok(())
    } else {
        fail(AdgStatus::OutOfVocabulary, format!("word id {word_id} out of range"))
    }
}

fn check_sense(m: &SenseModel<f32>, sense: u32) -> Result<(), Fail> {
    if (sense as usize) < m.senses() {
        Ok(())
    } else {
        fail(AdgStatus::InvalidArgument, format!("sense {sense} out of range"))
    }
}

unsafe fn write_out<T>(p: *mut T, v: T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        return fail(AdgStatus::NullPointer, format!("{name} is null"));
    }
    p.write(v);
    Ok(())
}

/// Message describing the most recent failure on this thread, or an empty
/// string. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn adg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Training defaults.
#[no_mangle]
pub extern "C" fn adg_train_config_default() -> AdgTrainConfig {
    let d = TrainingConfig::default();
    AdgTrainConfig {
        dim: d.dim,
        senses: d.senses,
        alpha: d.alpha,
        window: d.window,
        min_count: d.min_count,
        epochs: d.epochs,
        workers: d.workers,
        seed: d.seed,
        rho0: d.rho0,
        lambda0: d.lambda0,
        min_rate: d.min_rate,
    }
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adg_model_load(path: *const c_char, out: *mut *mut AdgModel) -> AdgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return fail(AdgStatus::NullPointer, "out is null");
        }
        let inner = adagram::load_model(path)?;
        *out = Box::into_raw(Box::new(AdgModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `corpus_path` must be a NUL-terminated string, `config` and `out` valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn adg_train_file(
    corpus_path: *const c_char,
    config: *const AdgTrainConfig,
    out: *mut *mut AdgModel,
) -> AdgStatus {
    guard(|| {
        let path = str_arg(corpus_path, "corpus_path")?;
        if config.is_null() || out.is_null() {
            return fail(AdgStatus::NullPointer, "config or out is null");
        }
        let c = &*config;
        let cfg = TrainingConfig {
            window: c.window,
            epochs: c.epochs,
            rho0: c.rho0,
            lambda0: c.lambda0,
            min_rate: c.min_rate,
            senses: c.senses,
            dim: c.dim,
            alpha: c.alpha,
            min_count: c.min_count,
            seed: c.seed,
            workers: c.workers,
            progress: false,
        };
        let text = corpus::read_corpus(path)?;
        let inner = adagram::train(corpus::tokenize(&text), &cfg)?;
        *out = Box::into_raw(Box::new(AdgModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn adg_model_free(model: *mut AdgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn adg_model_save(model: *const AdgModel, path: *const c_char) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = str_arg(path, "path")?;
        adagram::save_model(m, path)?;
        Ok(())
    })
}

/// Vocabulary size, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adg_model_vocab_size(model: *const AdgModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_words())
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adg_model_dim(model: *const AdgModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adg_model_senses(model: *const AdgModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.senses())
}

/// # Safety
/// `model` must be a live handle, `word` a NUL-terminated string and
/// `out_id` valid.
#[no_mangle]
pub unsafe extern "C" fn adg_model_word_id(model: *const AdgModel, word: *const c_char, out_id: *mut u32) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        let word = str_arg(word, "word")?;
        let id = m
            .vocab()
            .id(word)
            .ok_or_else(|| Fail(AdgStatus::OutOfVocabulary, format!("{word:?} not in vocabulary")))?;
        write_out(out_id, id, "out_id")
    })
}

/// Copy the word with id `word_id` into `buf` as a NUL-terminated string.
/// `out_len` receives the byte length without the terminator, also when the
/// buffer is too small.
///
/// # Safety
/// `buf` must hold `cap` bytes; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adg_model_word(
    model: *const AdgModel,
    word_id: u32,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_word(m, word_id)?;
        let w = m.vocab().word(word_id).as_bytes();
        write_out(out_len, w.len(), "out_len")?;
        let dst = out_slice(buf as *mut u8, cap, w.len() + 1, "buf")?;
        dst[..w.len()].copy_from_slice(w);
        dst[w.len()] = 0;
        Ok(())
    })
}

/// Prior sense probabilities of a word; `out` must hold `senses` values.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn adg_model_prior(model: *const AdgModel, word_id: u32, out: *mut f64, out_len: usize) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_word(m, word_id)?;
        let dst = out_slice(out, out_len, m.senses(), "out")?;
        dst.copy_from_slice(m.prior_sense_probs(word_id).probs());
        Ok(())
    })
}

/// Sense posterior of `word_id` given context word ids.
///
/// # Safety
/// `context` must point to `context_len` ids; `out` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adg_model_disambiguate(
    model: *const AdgModel,
    word_id: u32,
    context: *const u32,
    context_len: usize,
    out: *mut f64,
    out_len: usize,
) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_word(m, word_id)?;
        let ctx = in_slice(context, context_len, "context")?;
        for &c in ctx {
            check_word(m, c)?;
        }
        let dst = out_slice(out, out_len, m.senses(), "out")?;
        dst.copy_from_slice(disambiguate(m, word_id, ctx).probs());
        Ok(())
    })
}

/// Copy the prototype of `(word_id, sense)`; `out` must hold `dim` floats.
///
/// # Safety
/// `out` must point to `out_len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn adg_model_sense_vector(
    model: *const AdgModel,
    word_id: u32,
    sense: u32,
    out: *mut f32,
    out_len: usize,
) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_word(m, word_id)?;
        check_sense(m, sense)?;
        let dst = out_slice(out, out_len, m.dim(), "out")?;
        dst.copy_from_slice(m.in_vec(word_id, sense as usize));
        Ok(())
    })
}

/// Number of senses with prior probability above `epsilon`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adg_model_sense_count(
    model: *const AdgModel,
    word_id: u32,
    epsilon: f64,
    out: *mut usize,
) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_word(m, word_id)?;
        write_out(out, m.sense_count(word_id, epsilon), "out")
    })
}

/// Up to `cap` nearest prototypes of other words; `out_len` receives the
/// number written.
///
/// # Safety
/// `out` must point to `cap` neighbors; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adg_model_nearest(
    model: *const AdgModel,
    word_id: u32,
    sense: u32,
    epsilon: f64,
    out: *mut AdgNeighbor,
    cap: usize,
    out_len: *mut usize,
) -> AdgStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_word(m, word_id)?;
        check_sense(m, sense)?;
        if out_len.is_null() {
            return fail(AdgStatus::NullPointer, "out_len is null");
        }
        let hits = nearest_neighbors(m, word_id, sense as usize, cap, epsilon)?;
        let dst = out_slice(out, cap, hits.len(), "out")?;
        for (d, h) in dst.iter_mut().zip(&hits) {
            *d = AdgNeighbor {
                word_id: h.word,
                sense: h.sense as u32,
                cosine: h.cosine,
            };
        }
        *out_len = hits.len();
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdgMetric {
    Ari = 0,
    VMeasure = 1,
    PairedFscore = 2,
}

/// Clustering agreement between two labelings of `n` items.
///
/// # Safety
/// `gold` and `pred` must point to `n` labels; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adg_cluster_score(
    metric: AdgMetric,
    gold: *const u32,
    pred: *const u32,
    n: usize,
    out: *mut f64,
) -> AdgStatus {
    guard(|| {
        let g = in_slice(gold, n, "gold")?;
        let p = in_slice(pred, n, "pred")?;
        let v = match metric {
            AdgMetric::Ari => wsi::ari(g, p)?,
            AdgMetric::VMeasure => wsi::v_measure(g, p)?,
            AdgMetric::PairedFscore => wsi::paired_fscore(g, p)?,
        };
        write_out(out, v, "out")
    })
}
