use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("not a rational: {0:?}")]
    Rational(String),
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("field `{field}`: {msg}")]
    Field { field: String, msg: String },
}
