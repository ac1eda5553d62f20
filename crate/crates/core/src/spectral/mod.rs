pub mod band;
pub mod basis;
pub mod eigen;
pub mod legendre;
pub mod operator;
pub mod quadrature;
