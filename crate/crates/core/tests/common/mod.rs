pub mod checks;
pub mod oracle;
