//! Mutation engines: byte-level havoc for the fuzzer half and the
//! prompt-driven chat mutator.

pub mod chat;
pub mod dict;
pub mod havoc;

pub use chat::{build_prompt, parse_response, ChatMutator, ChatRequestConfig, Endpoint, MutationRecord, PromptPayload, PromptVariant};
pub use dict::{load_dictionary, parse_dictionary, DictionaryParseError};
pub use havoc::havoc;
