use std::ffi::{CStr, CString};
use std::ptr;

use adagram_ffi::*;

fn corpus() -> String {
    let mut s = String::new();
    for i in 0..400 {
        let topic = if i % 2 == 0 { ["sun", "sky", "blue", "cloud"] } else { ["fish", "sea", "wave", "salt"] };
        for j in 0..12 {
            s.push_str(topic[(i * 7 + j * 3) % 4]);
            s.push(' ');
            s.push_str(["the", "a", "of"][(i + j) % 3]);
            s.push(' ');
        }
        s.push('\n');
    }
    s
}

fn trained(dir: &tempfile::TempDir) -> *mut AdgModel {
    let path = dir.path().join("corpus.txt");
    std::fs::write(&path, corpus()).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut cfg = adg_train_config_default();
    cfg.dim = 8;
    cfg.senses = 3;
    cfg.min_count = 1;
    cfg.window = 4;
    let mut model = ptr::null_mut();
    let st = unsafe { adg_train_file(cpath.as_ptr(), &cfg, &mut model) };
    assert_eq!(st, AdgStatus::Ok);
    assert!(!model.is_null());
    model
}

#[test]
fn defaults_mirror_the_library() {
    let c = adg_train_config_default();
    assert_eq!((c.dim, c.senses, c.window, c.min_count, c.epochs, c.workers), (300, 30, 10, 20, 1, 1));
    assert_eq!(c.alpha, 0.15);
}

#[test]
fn train_query_save_load() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained(&dir);
    unsafe {
        assert_eq!(adg_model_vocab_size(model), 11);
        assert_eq!(adg_model_dim(model), 8);
        assert_eq!(adg_model_senses(model), 3);

        let mut sea = 0u32;
        assert_eq!(adg_model_word_id(model, c"sea".as_ptr(), &mut sea), AdgStatus::Ok);
        let mut buf = [0 as std::ffi::c_char; 16];
        let mut len = 0usize;
        assert_eq!(adg_model_word(model, sea, buf.as_mut_ptr(), buf.len(), &mut len), AdgStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "sea");
        assert_eq!(len, 3);
        assert_eq!(adg_model_word(model, sea, buf.as_mut_ptr(), 2, &mut len), AdgStatus::BufferTooSmall);

        let mut missing = 0u32;
        assert_eq!(adg_model_word_id(model, c"zzz".as_ptr(), &mut missing), AdgStatus::OutOfVocabulary);
        assert!(!CStr::from_ptr(adg_last_error()).to_bytes().is_empty());

        let mut prior = [0.0f64; 3];
        assert_eq!(adg_model_prior(model, sea, prior.as_mut_ptr(), 3), AdgStatus::Ok);
        assert!((prior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(adg_model_prior(model, sea, prior.as_mut_ptr(), 2), AdgStatus::BufferTooSmall);

        let mut post = [0.0f64; 3];
        let mut fish = 0u32;
        adg_model_word_id(model, c"fish".as_ptr(), &mut fish);
        let ctx = [fish, fish];
        assert_eq!(adg_model_disambiguate(model, sea, ctx.as_ptr(), 2, post.as_mut_ptr(), 3), AdgStatus::Ok);
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(adg_model_disambiguate(model, sea, ptr::null(), 0, post.as_mut_ptr(), 3), AdgStatus::Ok);
        for k in 0..3 {
            assert!((post[k] - prior[k]).abs() < 1e-15);
        }
        let bad = [999u32];
        assert_eq!(
            adg_model_disambiguate(model, sea, bad.as_ptr(), 1, post.as_mut_ptr(), 3),
            AdgStatus::OutOfVocabulary
        );

        let mut vec = [0.0f32; 8];
        assert_eq!(adg_model_sense_vector(model, sea, 0, vec.as_mut_ptr(), 8), AdgStatus::Ok);
        assert!(vec.iter().any(|&x| x != 0.0));
        assert_eq!(adg_model_sense_vector(model, sea, 3, vec.as_mut_ptr(), 8), AdgStatus::InvalidArgument);

        let mut count = 0usize;
        assert_eq!(adg_model_sense_count(model, sea, 1e-3, &mut count), AdgStatus::Ok);
        assert!((1..=3).contains(&count));

        let mut hits = [AdgNeighbor { word_id: 0, sense: 0, cosine: 0.0 }; 5];
        let mut n = 0usize;
        assert_eq!(adg_model_nearest(model, sea, 0, 0.0, hits.as_mut_ptr(), 5, &mut n), AdgStatus::Ok);
        assert_eq!(n, 5);
        assert!(hits.iter().all(|h| h.word_id != sea));
        assert!(hits.windows(2).all(|p| p[0].cosine >= p[1].cosine));

        let path = CString::new(dir.path().join("m.bin").to_str().unwrap()).unwrap();
        assert_eq!(adg_model_save(model, path.as_ptr()), AdgStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(adg_model_load(path.as_ptr(), &mut back), AdgStatus::Ok);
        let mut v2 = [0.0f32; 8];
        adg_model_sense_vector(back, sea, 0, v2.as_mut_ptr(), 8);
        assert_eq!(vec.map(f32::to_bits), v2.map(f32::to_bits));
        adg_model_free(back);
        adg_model_free(model);
    }
}

#[test]
fn corrupted_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let model = trained(&dir);
    let file = dir.path().join("m.bin");
    let path = CString::new(file.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(adg_model_save(model, path.as_ptr()), AdgStatus::Ok);
        adg_model_free(model);
    }
    let mut bytes = std::fs::read(&file).unwrap();
    let at = bytes.len() / 2;
    bytes[at] ^= 0x10;
    std::fs::write(&file, bytes).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { adg_model_load(path.as_ptr(), &mut m) }, AdgStatus::CorruptModel);
    assert!(m.is_null());
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/adagram.h");
    for name in [
        "adg_last_error",
        "adg_train_config_default",
        "adg_model_load",
        "adg_train_file",
        "adg_model_free",
        "adg_model_save",
        "adg_model_vocab_size",
        "adg_model_dim",
        "adg_model_senses",
        "adg_model_word_id",
        "adg_model_word",
        "adg_model_prior",
        "adg_model_disambiguate",
        "adg_model_sense_vector",
        "adg_model_sense_count",
        "adg_model_nearest",
        "adg_cluster_score",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
