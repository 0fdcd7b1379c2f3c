pub mod coeff;
pub mod error;
pub mod gcd;
pub mod linalg;
pub mod poly;
pub mod projgeom;
pub mod quadrature;
pub mod forms;
pub mod energy;
pub mod verify;
pub mod cli;
