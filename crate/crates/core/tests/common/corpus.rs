//! Checked-in fuzz seeds and a byte-level mutator, so the decoders get
//! exercised on stable without a fuzzing engine.

use std::path::PathBuf;

use proptest::prelude::*;

pub fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[derive(Debug, Clone)]
pub enum Edit {
    Flip(usize, u8),
    Set(usize, u8),
    Insert(usize, u8),
    Remove(usize),
    Truncate(usize),
    Splice(usize, usize, usize),
}

pub fn edits() -> impl Strategy<Value = Vec<Edit>> {
    let any_pos = any::<usize>();
    // Bytes that matter to the formats more than uniform noise does.
    let byte = prop_oneof![any::<u8>(), prop::sample::select(b"0123456789.-+eE,:{}[]\"\n\0 ".to_vec())];
    let edit = prop_oneof![
        (any_pos, any::<u8>()).prop_map(|(i, b)| Edit::Flip(i, b)),
        (any_pos, byte.clone()).prop_map(|(i, b)| Edit::Set(i, b)),
        (any_pos, byte).prop_map(|(i, b)| Edit::Insert(i, b)),
        any_pos.prop_map(Edit::Remove),
        any_pos.prop_map(Edit::Truncate),
        (any_pos, any_pos, 1usize..64).prop_map(|(a, b, n)| Edit::Splice(a, b, n)),
    ];
    prop::collection::vec(edit, 1..6)
}

pub fn mutate(seed: &[u8], edits: &[Edit]) -> Vec<u8> {
    let mut v = seed.to_vec();
    for e in edits {
        let n = v.len();
        match *e {
            Edit::Flip(i, b) if n > 0 => v[i % n] ^= b,
            Edit::Set(i, b) if n > 0 => v[i % n] = b,
            Edit::Insert(i, b) => v.insert(i % (n + 1), b),
            Edit::Remove(i) if n > 0 => {
                v.remove(i % n);
            }
            Edit::Truncate(i) => v.truncate(i % (n + 1)),
            Edit::Splice(from, to, len) if n > 0 => {
                let from = from % n;
                let chunk: Vec<u8> = v[from..(from + len).min(n)].to_vec();
                let at = to % (n + 1);
                v.splice(at..at, chunk);
            }
            _ => {}
        }
    }
    v
}
