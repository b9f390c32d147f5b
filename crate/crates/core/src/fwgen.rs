//! Firewall configuration emission for a clustering.
//!
//! Every substation of the UCC subgraph gets its own firewall; each detached
//! subgraph shares one. A substation-side firewall carries three permits
//! (DNP3 from the SCADA master, SQL to the local database, web access from
//! the HMI) and a closing `deny ip any any` on each of its three interfaces.
//! The UCC firewall carries a DNP3 and a web permit per protected target,
//! the two fixed SQL permits toward the public database, and three denies.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{count_acls, count_firewalls, FitnessError};
use crate::topology::{Clustering, UtilityGraph};

#[derive(Debug, Error, PartialEq)]
pub enum FwgenError {
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("cluster index {0} out of range")]
    NoSuchCluster(usize),
    #[error("clustering must have exactly one UCC subgraph, found {0}")]
    UccSubgraphs(usize),
    #[error("service flow `{0}` missing from flow table")]
    MissingFlow(String),
    #[error("`{device}` references undeclared group `{group}`")]
    DanglingGroup { device: String, group: String },
    #[error("security level {0} outside 0-100")]
    SecurityLevel(u8),
    #[error("node index {0} does not fit the per-utility address plan")]
    AddressSpace(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    Tcp,
    Udp,
}

impl Transport {
    fn as_str(self) -> &'static str {
        match self {
            Transport::Tcp => "tcp",
            Transport::Udp => "udp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ServiceFlow {
    pub name: String,
    pub transport: Transport,
    pub port: u16,
}

/// Named service flows available to the templates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowTable(Vec<ServiceFlow>);

impl FlowTable {
    pub fn builtin() -> Self {
        let f = |name: &str, port| ServiceFlow { name: name.into(), transport: Transport::Tcp, port };
        Self(vec![
            f("DNP3", 20000),
            f("HTTP", 80),
            f("HTTPS", 443),
            f("SSH", 22),
            f("RDP", 3389),
            f("SQL", 1433),
            f("ICCP", 102),
        ])
    }

    pub fn new(flows: Vec<ServiceFlow>) -> Self {
        Self(flows)
    }

    pub fn flows(&self) -> &[ServiceFlow] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Result<&ServiceFlow, FwgenError> {
        self.0.iter().find(|f| f.name == name).ok_or_else(|| FwgenError::MissingFlow(name.into()))
    }
}

impl Default for FlowTable {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interface {
    pub hardware: String,
    pub nameif: String,
    pub security_level: u8,
    pub address: Ipv4Addr,
    pub prefix: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkObject {
    Host(Ipv4Addr),
    Subnet(Ipv4Addr, u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Permit,
    Deny,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Any,
    Group(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AclEntry {
    pub action: Action,
    pub src: Endpoint,
    pub dst: Endpoint,
    /// Service object-group, or `None` for any IP traffic.
    pub service: Option<String>,
    /// `nameif` of the interface the list is bound to (inbound).
    pub interface: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceRole {
    /// Firewall of one substation inside the UCC subgraph.
    Substation,
    /// Shared firewall of a detached subgraph.
    Cluster,
    /// Substation-facing firewall at the control center.
    Ucc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirewallConfig {
    pub device_name: String,
    pub role: DeviceRole,
    /// 1-based subgraph index within the clustering.
    pub cluster: usize,
    pub substations: Vec<String>,
    pub interfaces: Vec<Interface>,
    pub network_groups: BTreeMap<String, Vec<NetworkObject>>,
    pub service_groups: BTreeMap<String, Vec<ServiceFlow>>,
    pub acl_entries: Vec<AclEntry>,
}

impl FirewallConfig {
    pub fn validate(&self) -> Result<(), FwgenError> {
        for i in &self.interfaces {
            if i.security_level > 100 {
                return Err(FwgenError::SecurityLevel(i.security_level));
            }
        }
        let dangling = |group: &str| FwgenError::DanglingGroup {
            device: self.device_name.clone(),
            group: group.to_string(),
        };
        for e in &self.acl_entries {
            for ep in [&e.src, &e.dst] {
                if let Endpoint::Group(g) = ep {
                    if !self.network_groups.contains_key(g) {
                        return Err(dangling(g));
                    }
                }
            }
            if let Some(s) = &e.service {
                if !self.service_groups.contains_key(s) {
                    return Err(dangling(s));
                }
            }
            if !self.interfaces.iter().any(|i| i.nameif == e.interface) {
                return Err(dangling(&e.interface));
            }
        }
        Ok(())
    }
}

/// Deterministic address plan: utility `u` owns `10.u.0.0/16` and node index
/// `i` owns `10.u.i.0/24`, split into OT `/25`, DMZ `/26` and WAN `/26`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Addressing {
    pub utility_octet: u8,
}

impl Addressing {
    pub fn new(utility_index: usize) -> Result<Self, FwgenError> {
        u8::try_from(utility_index)
            .map(|utility_octet| Self { utility_octet })
            .map_err(|_| FwgenError::AddressSpace(utility_index))
    }

    fn base(&self, node: usize) -> Result<[u8; 3], FwgenError> {
        let n = u8::try_from(node).map_err(|_| FwgenError::AddressSpace(node))?;
        Ok([10, self.utility_octet, n])
    }

    fn addr(&self, node: usize, host: u8) -> Result<Ipv4Addr, FwgenError> {
        let [a, b, c] = self.base(node)?;
        Ok(Ipv4Addr::new(a, b, c, host))
    }

    fn interfaces(&self, node: usize, names: [&str; 3]) -> Result<Vec<Interface>, FwgenError> {
        let levels = [100, 50, 0];
        let hosts = [1, 129, 193];
        let prefixes = [25, 26, 26];
        (0..3)
            .map(|k| {
                Ok(Interface {
                    hardware: format!("GigabitEthernet0/{k}"),
                    nameif: names[k].to_string(),
                    security_level: levels[k],
                    address: self.addr(node, hosts[k])?,
                    prefix: prefixes[k],
                })
            })
            .collect()
    }

    fn ot_net(&self, node: usize) -> Result<NetworkObject, FwgenError> {
        Ok(NetworkObject::Subnet(self.addr(node, 0)?, 25))
    }
}

// host offsets within a node's /24
const SCADA_HOST: u8 = 10;
const HMI_HOST: u8 = 11;
const DB_HOST: u8 = 130;
const WEB_HOST: u8 = 131;
const ICCP_HOST: u8 = 140;
const PUBDB_HOST: u8 = 141;

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect()
}

fn group(cluster: usize, role: &str) -> String {
    format!("OG_NET_C{cluster}_{role}")
}

fn svc(name: &str) -> String {
    format!("OG_SVC_{name}")
}

fn permit(src: &str, dst: &str, service: &str, interface: &str) -> AclEntry {
    AclEntry {
        action: Action::Permit,
        src: Endpoint::Group(src.into()),
        dst: Endpoint::Group(dst.into()),
        service: Some(service.into()),
        interface: interface.into(),
    }
}

fn deny_any(interface: &str) -> AclEntry {
    AclEntry {
        action: Action::Deny,
        src: Endpoint::Any,
        dst: Endpoint::Any,
        service: None,
        interface: interface.into(),
    }
}

fn service_groups(
    flows: &FlowTable,
    wanted: &[(&str, &[&str])],
) -> Result<BTreeMap<String, Vec<ServiceFlow>>, FwgenError> {
    wanted
        .iter()
        .map(|(name, members)| {
            let fs = members.iter().map(|m| flows.get(m).cloned()).collect::<Result<_, _>>()?;
            Ok((svc(name), fs))
        })
        .collect()
}

/// One substation-side firewall protecting `members` (node indices).
fn substation_firewall(
    graph: &UtilityGraph,
    addressing: &Addressing,
    flows: &FlowTable,
    cluster: usize,
    members: &[usize],
    role: DeviceRole,
    device_name: String,
) -> Result<FirewallConfig, FwgenError> {
    let ucc = graph.ucc();
    let mut network_groups = BTreeMap::new();
    network_groups.insert(group(cluster, "SCADA"), vec![NetworkObject::Host(addressing.addr(ucc, SCADA_HOST)?)]);
    network_groups.insert(group(cluster, "HMI"), vec![NetworkObject::Host(addressing.addr(ucc, HMI_HOST)?)]);
    let mut ot = Vec::new();
    let mut db = Vec::new();
    let mut web = Vec::new();
    for &v in members {
        ot.push(addressing.ot_net(v)?);
        db.push(NetworkObject::Host(addressing.addr(v, DB_HOST)?));
        web.push(NetworkObject::Host(addressing.addr(v, WEB_HOST)?));
    }
    network_groups.insert(group(cluster, "OT"), ot);
    network_groups.insert(group(cluster, "DB"), db);
    network_groups.insert(group(cluster, "WEB"), web);
    let service_groups =
        service_groups(flows, &[("DNP3", &["DNP3"]), ("SQL", &["SQL"]), ("WEB", &["HTTP", "HTTPS"])])?;
    let acl_entries = vec![
        permit(&group(cluster, "SCADA"), &group(cluster, "OT"), &svc("DNP3"), "wan"),
        permit(&group(cluster, "OT"), &group(cluster, "DB"), &svc("SQL"), "ot"),
        permit(&group(cluster, "HMI"), &group(cluster, "WEB"), &svc("WEB"), "wan"),
        deny_any("wan"),
        deny_any("ot"),
        deny_any("dmz"),
    ];
    let config = FirewallConfig {
        device_name,
        role,
        cluster,
        substations: members.iter().map(|&v| graph.nodes()[v].id.clone()).collect(),
        interfaces: addressing.interfaces(members[0], ["ot", "dmz", "wan"])?,
        network_groups,
        service_groups,
        acl_entries,
    };
    config.validate()?;
    Ok(config)
}

/// Substation-side firewalls for subgraph `cluster` (0-based): one per
/// substation in the UCC subgraph, a single shared one otherwise.
pub fn emit_substation_configs(
    graph: &UtilityGraph,
    clustering: &Clustering,
    cluster: usize,
    addressing: &Addressing,
    flows: &FlowTable,
) -> Result<Vec<FirewallConfig>, FwgenError> {
    let members = clustering.subgraphs.get(cluster).ok_or(FwgenError::NoSuchCluster(cluster))?;
    if members.is_empty() {
        return Err(FwgenError::EmptyCluster(cluster));
    }
    let label = cluster + 1;
    if members.contains(&graph.ucc()) {
        members
            .iter()
            .filter(|&&v| v != graph.ucc())
            .map(|&v| {
                let name = format!("FW_{}", sanitize(&graph.nodes()[v].id));
                substation_firewall(graph, addressing, flows, label, &[v], DeviceRole::Substation, name)
            })
            .collect()
    } else {
        let name = format!("FW_C{label}");
        Ok(vec![substation_firewall(graph, addressing, flows, label, members, DeviceRole::Cluster, name)?])
    }
}

/// The UCC's substation-facing firewall.
pub fn emit_ucc_config(
    graph: &UtilityGraph,
    clustering: &Clustering,
    addressing: &Addressing,
    flows: &FlowTable,
) -> Result<FirewallConfig, FwgenError> {
    if clustering.m_u != 1 {
        return Err(FwgenError::UccSubgraphs(clustering.m_u));
    }
    let ucc = graph.ucc();
    let mut network_groups = BTreeMap::new();
    let host = |role: &str, h: u8| -> Result<(String, Vec<NetworkObject>), FwgenError> {
        Ok((group(1, role), vec![NetworkObject::Host(addressing.addr(ucc, h)?)]))
    };
    network_groups.extend([
        host("SCADA", SCADA_HOST)?,
        host("HMI", HMI_HOST)?,
        host("ICCP", ICCP_HOST)?,
        host("PUBDB", PUBDB_HOST)?,
    ]);
    let mut acl_entries = Vec::new();
    let mut protect = |label: usize, role: &str, members: &[usize]| -> Result<(), FwgenError> {
        let ot = group(label, &format!("{role}OT"));
        let web = group(label, &format!("{role}WEB"));
        let mut ot_nets = Vec::new();
        let mut webs = Vec::new();
        for &v in members {
            ot_nets.push(addressing.ot_net(v)?);
            webs.push(NetworkObject::Host(addressing.addr(v, WEB_HOST)?));
        }
        network_groups.insert(ot.clone(), ot_nets);
        network_groups.insert(web.clone(), webs);
        acl_entries.push(permit(&group(1, "SCADA"), &ot, &svc("DNP3"), "inside"));
        acl_entries.push(permit(&group(1, "HMI"), &web, &svc("WEB"), "inside"));
        Ok(())
    };
    for &v in clustering.subgraphs[0].iter().filter(|&&v| v != ucc) {
        protect(1, &format!("{}_", sanitize(&graph.nodes()[v].id)), &[v])?;
    }
    for (x, members) in clustering.subgraphs.iter().enumerate().skip(1) {
        protect(x + 1, "", members)?;
    }
    acl_entries.push(permit(&group(1, "SCADA"), &group(1, "PUBDB"), &svc("SQL"), "inside"));
    acl_entries.push(deny_any("inside"));
    acl_entries.push(permit(&group(1, "ICCP"), &group(1, "PUBDB"), &svc("SQL"), "dmz"));
    acl_entries.push(deny_any("dmz"));
    acl_entries.push(deny_any("outside"));

    let config = FirewallConfig {
        device_name: format!("FW_{}", sanitize(graph.ucc_id())),
        role: DeviceRole::Ucc,
        cluster: 1,
        substations: Vec::new(),
        interfaces: addressing.interfaces(ucc, ["inside", "dmz", "outside"])?,
        network_groups,
        service_groups: service_groups(flows, &[("DNP3", &["DNP3"]), ("SQL", &["SQL"]), ("WEB", &["HTTP", "HTTPS"])])?,
        acl_entries,
    };
    config.validate()?;
    Ok(config)
}

/// All firewalls of a utility: substation-side devices in cluster order,
/// then the UCC firewall.
pub fn emit_utility(
    graph: &UtilityGraph,
    clustering: &Clustering,
    addressing: &Addressing,
    flows: &FlowTable,
) -> Result<Vec<FirewallConfig>, FwgenError> {
    let mut out = Vec::new();
    for x in 0..clustering.n_sg() {
        out.extend(emit_substation_configs(graph, clustering, x, addressing, flows)?);
    }
    out.push(emit_ucc_config(graph, clustering, addressing, flows)?);
    Ok(out)
}

fn mask(prefix: u8) -> Ipv4Addr {
    let bits = if prefix == 0 { 0 } else { u32::MAX << (32 - u32::from(prefix)) };
    Ipv4Addr::from(bits)
}

fn endpoint_text(e: &Endpoint) -> String {
    match e {
        Endpoint::Any => "any".into(),
        Endpoint::Group(g) => format!("object-group {g}"),
    }
}

fn acl_name(interface: &str) -> String {
    format!("{interface}_access_in")
}

/// ASA-style configuration text.
pub fn render_config_text(config: &FirewallConfig) -> Result<String, FwgenError> {
    config.validate()?;
    let mut s = String::new();
    let role = match config.role {
        DeviceRole::Substation => "substation",
        DeviceRole::Cluster => "cluster",
        DeviceRole::Ucc => "ucc",
    };
    let _ = writeln!(s, ": {role} firewall, cluster C{}", config.cluster);
    if !config.substations.is_empty() {
        let _ = writeln!(s, ": protects {}", config.substations.join(" "));
    }
    let _ = writeln!(s, "hostname {}", config.device_name);
    s.push_str("!\n");
    for i in &config.interfaces {
        let _ = writeln!(s, "interface {}", i.hardware);
        let _ = writeln!(s, " nameif {}", i.nameif);
        let _ = writeln!(s, " security-level {}", i.security_level);
        let _ = writeln!(s, " ip address {} {}", i.address, mask(i.prefix));
        s.push_str("!\n");
    }
    for (name, members) in &config.network_groups {
        let _ = writeln!(s, "object-group network {name}");
        for m in members {
            match m {
                NetworkObject::Host(a) => {
                    let _ = writeln!(s, " network-object host {a}");
                }
                NetworkObject::Subnet(a, p) => {
                    let _ = writeln!(s, " network-object {a} {}", mask(*p));
                }
            }
        }
        s.push_str("!\n");
    }
    for (name, flows) in &config.service_groups {
        let _ = writeln!(s, "object-group service {name}");
        for f in flows {
            let _ = writeln!(s, " service-object {} destination eq {}", f.transport.as_str(), f.port);
        }
        s.push_str("!\n");
    }
    for e in &config.acl_entries {
        let action = match e.action {
            Action::Permit => "permit",
            Action::Deny => "deny",
        };
        let service = match &e.service {
            Some(g) => format!("object-group {g}"),
            None => "ip".into(),
        };
        let _ = writeln!(
            s,
            "access-list {} extended {action} {service} {} {}",
            acl_name(&e.interface),
            endpoint_text(&e.src),
            endpoint_text(&e.dst)
        );
    }
    s.push_str("!\n");
    let mut bound: Vec<&str> = Vec::new();
    for e in &config.acl_entries {
        if !bound.contains(&e.interface.as_str()) {
            bound.push(&e.interface);
        }
    }
    for iface in bound {
        let _ = writeln!(s, "access-group {} in interface {iface}", acl_name(iface));
    }
    s.push_str("end\n");
    Ok(s)
}

/// Counts recovered from rendered configuration text.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedCounts {
    pub hostname: String,
    pub interfaces: usize,
    pub network_groups: usize,
    pub service_groups: usize,
    pub access_list_lines: usize,
    pub deny_any_lines: usize,
    pub access_groups: usize,
}

pub fn parse_config_text(text: &str) -> ParsedCounts {
    let mut p = ParsedCounts::default();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix("hostname ") {
            p.hostname = h.to_string();
        } else if line.starts_with("interface ") {
            p.interfaces += 1;
        } else if line.starts_with("object-group network ") {
            p.network_groups += 1;
        } else if line.starts_with("object-group service ") {
            p.service_groups += 1;
        } else if line.starts_with("access-list ") {
            p.access_list_lines += 1;
            if line.ends_with("deny ip any any") {
                p.deny_any_lines += 1;
            }
        } else if line.starts_with("access-group ") {
            p.access_groups += 1;
        }
    }
    p
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub device: String,
    pub expected: i64,
    pub actual: i64,
    pub delta: i64,
}

/// Cross-check of emitted devices against the closed-form counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub expected_firewalls: u32,
    pub emitted_firewalls: u32,
    pub expected_acls: u32,
    pub emitted_acls: u32,
    pub mismatches: Vec<Mismatch>,
    pub clean: bool,
}

/// Compares `configs` with [`count_firewalls`] (substation-side devices) and
/// [`count_acls`] (all entries, UCC firewall included). Per-device
/// mismatches name the device and the entry-count delta.
pub fn audit_counts(configs: &[FirewallConfig], clustering: &Clustering) -> Result<AuditReport, FitnessError> {
    let expected_firewalls = count_firewalls(clustering)?;
    let expected_acls = count_acls(clustering)?;
    let detached = clustering.n_sg() - clustering.m_u;
    let ucc_inner: usize = clustering.subgraphs[..clustering.m_u].iter().map(|c| c.len() - 1).sum();
    let mut mismatches = Vec::new();
    let mut emitted_firewalls = 0u32;
    let mut emitted_acls = 0u32;
    for c in configs {
        let expected = match c.role {
            DeviceRole::Substation | DeviceRole::Cluster => {
                emitted_firewalls += 1;
                6
            }
            DeviceRole::Ucc => 2 * ucc_inner + 5 + 2 * detached,
        } as i64;
        let actual = c.acl_entries.len() as i64;
        emitted_acls += actual as u32;
        if actual != expected {
            mismatches.push(Mismatch {
                device: c.device_name.clone(),
                expected,
                actual,
                delta: actual - expected,
            });
        }
    }
    if emitted_firewalls != expected_firewalls {
        mismatches.push(Mismatch {
            device: "<firewall count>".into(),
            expected: expected_firewalls.into(),
            actual: emitted_firewalls.into(),
            delta: i64::from(emitted_firewalls) - i64::from(expected_firewalls),
        });
    }
    let clean = mismatches.is_empty() && emitted_acls == expected_acls;
    Ok(AuditReport { expected_firewalls, emitted_firewalls, expected_acls, emitted_acls, mismatches, clean })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub device: String,
    pub role: DeviceRole,
    pub cluster: usize,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub utility: String,
    pub solution: usize,
    pub devices: Vec<ManifestEntry>,
}

pub fn config_file_name(utility: &str, config: &FirewallConfig) -> String {
    format!("{}_{}.cfg", sanitize(utility), config.device_name)
}
