pub mod agent;
pub mod bench;
pub mod comms;
pub mod conformal;
pub mod explore;
pub mod oracle;
pub mod scenario;
pub mod scene;
pub mod tasks;

mod seeding;
