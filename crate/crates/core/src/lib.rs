//! Khovanov homology, the oriented cube-of-resolutions complex, and the
//! cube-filtration spectral sequence relating them to knot Floer homology.

pub mod c2complex;
pub mod diagram;
pub mod khovanov;
pub mod linalg;
pub mod polyring;
pub mod rational;
pub mod reference;
pub mod spectral;
