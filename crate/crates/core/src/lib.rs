//! b-bit minwise hashing for large-scale linear SVM.
//!
//! Binary samples (sets of feature indices) are sketched with `k` random
//! permutations, only the lowest `b` bits of each minimum are kept, and the
//! packed sketches are expanded on the fly into a `2^b * k` dimensional
//! one-hot space whose inner products count matching sketch positions. A
//! linear SVM trained by dual coordinate descent runs directly on that space.
//!
//! Modules, bottom-up:
//!
//! - [`dataio`]: svmlight parsing, binarization, splits, packed sketch files
//! - [`sketching`]: permutation families, minwise and b-bit sketches
//! - [`estimation`]: exact resemblance and the two resemblance estimators
//! - [`expansion`]: one-hot expansion of b-bit sketches
//! - [`kernelcheck`]: similarity matrices and their smallest eigenvalue
//! - [`svm`]: L1-loss linear SVM, dual coordinate descent
//! - [`experiment`]: repeated-split accuracy grids over `(b, k, C)`
//! - [`synth`]: planted synthetic binary classification data
//! - [`cli`]: the `bbit` command line front end

pub mod cli;
pub mod dataio;
pub mod error;
pub mod estimation;
pub mod expansion;
pub mod experiment;
pub mod kernelcheck;
pub mod sketching;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
