pub mod catalog;
pub mod diagnosis;
pub mod extraction;
pub mod io;
pub mod linalg;
pub mod optimality;
pub mod poly;
pub mod relaxation;
pub mod sdp;
