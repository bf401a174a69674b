pub mod canonical;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod extraction;
pub mod graph;
pub mod jsonl;
pub mod netanalysis;
pub mod notation;
pub mod pipeline;
pub mod provider;
pub mod semantics;
pub mod service;
