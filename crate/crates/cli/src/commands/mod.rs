pub mod inflate;
pub mod iterate;
pub mod norms;
pub mod oracle_check;
pub mod solve;
