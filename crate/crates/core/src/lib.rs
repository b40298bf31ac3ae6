pub mod diffeo;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod measure;
pub mod estimation;
pub mod runner;
