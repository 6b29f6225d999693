use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::ProcessId;

/// A point-to-point link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub bandwidth_bps: f64,
    pub delay_s: f64,
}

impl Link {
    pub const fn new(bandwidth_bps: f64, delay_s: f64) -> Self {
        Self {
            bandwidth_bps,
            delay_s,
        }
    }
}

pub const CLIENT_LINK: Link = Link::new(5e6, 0.004);
pub const ROUTER_LINK: Link = Link::new(10e6, 0.006);
pub const SERIES_SERVER_LINK: Link = Link::new(10e6, 0.002);
pub const STAR_SERVER_LINK: Link = Link::new(50e6, 0.002);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    /// Routers in a chain, one server behind each router.
    Series,
    /// The same router chain with every server behind one router.
    Star,
}

impl TopologyKind {
    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Series => "series",
            TopologyKind::Star => "star",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(TopologyKind::Series),
            "star" => Ok(TopologyKind::Star),
            _ => Err(Error::InvalidInput(format!("unknown topology {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Router(usize),
    Node(ProcessId),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSpec {
    pub a: Endpoint,
    pub b: Endpoint,
    pub link: Link,
}

/// Shape and link parameters of a deployment, before node counts are known.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub routers: usize,
    pub router_link: Link,
    pub server_link: Link,
    pub client_link: Link,
}

impl TopologySpec {
    pub fn series(n_servers: usize) -> Self {
        Self {
            kind: TopologyKind::Series,
            routers: n_servers,
            router_link: ROUTER_LINK,
            server_link: SERIES_SERVER_LINK,
            client_link: CLIENT_LINK,
        }
    }

    pub fn star(n_servers: usize) -> Self {
        Self {
            kind: TopologyKind::Star,
            routers: n_servers,
            router_link: ROUTER_LINK,
            server_link: STAR_SERVER_LINK,
            client_link: CLIENT_LINK,
        }
    }

    pub fn for_kind(kind: TopologyKind, n_servers: usize) -> Self {
        match kind {
            TopologyKind::Series => Self::series(n_servers),
            TopologyKind::Star => Self::star(n_servers),
        }
    }
}

/// Cost of a path: sum of propagation delays and of `1 / bandwidth`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PathCost {
    pub propagation_s: f64,
    pub seconds_per_bit: f64,
    pub links: usize,
    pub router_hops: usize,
}

impl PathCost {
    fn add(self, link: Link) -> Self {
        Self {
            propagation_s: self.propagation_s + link.delay_s,
            seconds_per_bit: self.seconds_per_bit + 1.0 / link.bandwidth_bps,
            links: self.links + 1,
            router_hops: self.router_hops,
        }
    }

    pub fn floor(&self, size_bits: u64) -> f64 {
        self.propagation_s + size_bits as f64 * self.seconds_per_bit
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    kind: TopologyKind,
    links: Vec<LinkSpec>,
    attachment: BTreeMap<ProcessId, (usize, Link)>,
    /// Shortest router-to-router path costs.
    router_paths: Vec<Vec<PathCost>>,
}

/// Attach every node to a router and precompute router-to-router paths.
///
/// Servers sit one per router (series) or all on the middle router (star);
/// clients, readers first, go round-robin over the routers.
pub fn build_topology(
    spec: &TopologySpec,
    n_servers: usize,
    n_readers: usize,
    n_writers: usize,
) -> Result<Network> {
    if spec.routers == 0 {
        return Err(Error::InvalidNetwork(
            "at least one router is required".into(),
        ));
    }
    if spec.kind == TopologyKind::Series && spec.routers != n_servers {
        return Err(Error::InvalidNetwork(format!(
            "series topology needs one router per server ({} routers, {n_servers} servers)",
            spec.routers
        )));
    }
    for (name, l) in [
        ("router", spec.router_link),
        ("server", spec.server_link),
        ("client", spec.client_link),
    ] {
        if !(l.bandwidth_bps > 0.0 && l.delay_s >= 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "{name} link parameters out of range"
            )));
        }
    }

    let mut links = Vec::new();
    for r in 1..spec.routers {
        links.push(LinkSpec {
            a: Endpoint::Router(r - 1),
            b: Endpoint::Router(r),
            link: spec.router_link,
        });
    }
    let mut attachment = BTreeMap::new();
    let star_router = spec.routers / 2;
    for s in 0..n_servers {
        let router = match spec.kind {
            TopologyKind::Series => s,
            TopologyKind::Star => star_router,
        };
        attachment.insert(ProcessId::server(s as u32), (router, spec.server_link));
    }
    let clients = (0..n_readers)
        .map(|i| ProcessId::reader(i as u32))
        .chain((0..n_writers).map(|i| ProcessId::writer(i as u32)));
    for (k, c) in clients.enumerate() {
        attachment.insert(c, (k % spec.routers, spec.client_link));
    }
    for (&node, &(router, link)) in &attachment {
        links.push(LinkSpec {
            a: Endpoint::Node(node),
            b: Endpoint::Router(router),
            link,
        });
    }

    Ok(Network {
        kind: spec.kind,
        router_paths: router_paths(spec.routers, &links),
        links,
        attachment,
    })
}

/// Breadth-first (fewest hops) paths over the router graph.
fn router_paths(routers: usize, links: &[LinkSpec]) -> Vec<Vec<PathCost>> {
    let mut adj: Vec<Vec<(usize, Link)>> = vec![Vec::new(); routers];
    for l in links {
        if let (Endpoint::Router(a), Endpoint::Router(b)) = (l.a, l.b) {
            adj[a].push((b, l.link));
            adj[b].push((a, l.link));
        }
    }
    (0..routers)
        .map(|src| {
            let mut cost: Vec<Option<PathCost>> = vec![None; routers];
            cost[src] = Some(PathCost::default());
            let mut queue = VecDeque::from([src]);
            while let Some(r) = queue.pop_front() {
                let here = cost[r].unwrap();
                for &(next, link) in &adj[r] {
                    if cost[next].is_none() {
                        let mut c = here.add(link);
                        c.router_hops += 1;
                        cost[next] = Some(c);
                        queue.push_back(next);
                    }
                }
            }
            // the chain is connected, so every router is reached
            cost.into_iter().map(Option::unwrap_or_default).collect()
        })
        .collect()
}

impl Network {
    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn router_of(&self, node: ProcessId) -> Option<usize> {
        self.attachment.get(&node).map(|&(r, _)| r)
    }

    pub fn path(&self, src: ProcessId, dst: ProcessId) -> Result<PathCost> {
        if src == dst {
            return Err(Error::InvalidInput(format!(
                "no network path from {src} to itself"
            )));
        }
        let unknown = |n: ProcessId| Error::InvalidInput(format!("{n} is not attached"));
        let &(ra, la) = self.attachment.get(&src).ok_or_else(|| unknown(src))?;
        let &(rb, lb) = self.attachment.get(&dst).ok_or_else(|| unknown(dst))?;
        Ok(self.router_paths[ra][rb].add(la).add(lb))
    }

    /// Transit time of a `size_bits` message: propagation plus transmission
    /// on every link of the path, plus uniform jitter in `[0, jitter_max]`.
    pub fn message_delay<R: Rng + ?Sized>(
        &self,
        src: ProcessId,
        dst: ProcessId,
        size_bits: u64,
        jitter_max: f64,
        rng: &mut R,
    ) -> Result<f64> {
        let floor = self.path(src, dst)?.floor(size_bits);
        let jitter = if jitter_max > 0.0 {
            rng.gen_range(0.0..=jitter_max)
        } else {
            0.0
        };
        Ok(floor + jitter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn star_servers_share_one_router() {
        let net = build_topology(&TopologySpec::star(9), 9, 10, 1).unwrap();
        for a in 0..9 {
            for b in 0..9 {
                if a != b {
                    let p = net
                        .path(ProcessId::server(a), ProcessId::server(b))
                        .unwrap();
                    assert_eq!((p.router_hops, p.links), (0, 2));
                }
            }
        }
        assert_eq!(net.router_of(ProcessId::reader(0)), Some(0));
        assert_eq!(net.router_of(ProcessId::reader(9)), Some(0));
        assert_eq!(net.router_of(ProcessId::writer(0)), Some(1));
    }

    #[test]
    fn series_chain_hops() {
        let net = build_topology(&TopologySpec::series(3), 3, 0, 1).unwrap();
        let p = net
            .path(ProcessId::server(0), ProcessId::server(2))
            .unwrap();
        assert_eq!(p.router_hops, 2);
        assert!((p.propagation_s - (0.002 + 0.006 + 0.006 + 0.002)).abs() < 1e-12);
        assert!(build_topology(&TopologySpec::series(3), 4, 0, 1).is_err());
    }

    #[test]
    fn write_only_network_is_valid() {
        let net = build_topology(&TopologySpec::star(3), 3, 0, 1).unwrap();
        assert!(net.path(ProcessId::writer(0), ProcessId::server(1)).is_ok());
        assert!(net
            .path(ProcessId::reader(0), ProcessId::server(1))
            .is_err());
    }

    #[test]
    fn delay_model() {
        let net = build_topology(&TopologySpec::star(9), 9, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = (ProcessId::server(0), ProcessId::server(5));
        let d = net.message_delay(a, b, 1024, 0.0, &mut rng).unwrap();
        let expected = 2.0 * 0.002 + 2.0 * (1024.0 / 50e6);
        assert!((d - expected).abs() < 1e-12, "{d} vs {expected}");
        assert!((d - 0.00404096).abs() < 1e-9);

        let pure = net.message_delay(a, b, 0, 0.0, &mut rng).unwrap();
        assert!((pure - 0.004).abs() < 1e-12);

        for seed in [1, 2] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = net.message_delay(a, b, 1024, 0.001, &mut rng).unwrap();
            assert!(j >= expected && j <= expected + 0.001);
        }
        assert!(net.message_delay(a, a, 8, 0.0, &mut rng).is_err());
    }
}
