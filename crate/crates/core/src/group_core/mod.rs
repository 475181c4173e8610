//! Matrix realisations of SU(2) and SL2(R), Hilbert-Schmidt metrics, the
//! adjoint representation and free-group word arithmetic.

mod element;
mod mat;
pub mod presets;
mod word;

pub use element::{
    enumerate_words, EnumerationMode, Freeness, GeneratorSet, GroupElement, GroupKind, Metric,
    GROUP_TOL, IDENTITY_TOL,
    RationalMat2,
};
pub use mat::{Mat2, Mat3, C64};
pub use word::{reduced_word_count, Letter, ReducedWords, Word, WordStream};
