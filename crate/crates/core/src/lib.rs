//! Security-zone partitioning of utility SCADA networks.
//!
//! A [`topology::UtilityGraph`] holds one control center (UCC) and its
//! substations. Each bit of a [`topology::Chromosome`] removes one edge; the
//! resulting connected components are the security zones. The
//! [`nsga2`] engine searches chromosomes against four objectives defined in
//! [`fitness`]: firewall count, ACL count, physical security and a
//! line-outage resilience score computed by [`grid`]. [`fwgen`] turns any
//! chosen solution into ASA-style firewall configurations, and
//! [`pipeline`] and [`reporting`] tie runs, files and statistics together.

pub mod fitness;
pub mod fwgen;
pub mod grid;
pub mod nsga2;
pub mod pipeline;
pub mod reporting;
pub mod system;
pub mod topology;
