//! Corpus preprocessing: tokenization, thresholded vocabulary, fixed-length encoding.

mod document;
mod encode;
mod tokenize;
mod vocab;

pub use document::{
    assign_splits, check_split_dates, read_corpus, write_corpus, RawDocument, Split, Task,
    TaskSchema,
};
pub use encode::{
    encode_corpus, encode_document, read_encoded, write_encoded, EncodedDocument, EncodedMeta,
    DEFAULT_LENGTH,
};
pub use tokenize::tokenize;
pub use vocab::{build_vocabulary, Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};
