use std::collections::BTreeMap;
use std::io;
use std::net::{Ipv4Addr, SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

use super::{NetError, SimNetwork};
use crate::wire::AgentId;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("socket error: {0}")]
    Io(#[from] io::Error),
    #[error("agent id {id} does not fit in the port range above base port {base_port}")]
    PortRange { id: AgentId, base_port: u16 },
}

/// Called once per arriving datagram with the sender's id.
pub type Receiver = Box<dyn FnMut(AgentId, Vec<u8>) + Send>;

/// Datagram transport as seen by one agent.
pub trait Transport {
    fn local_id(&self) -> AgentId;
    /// Fire-and-forget; a datagram lost in transit is not an error.
    fn send(&self, to: AgentId, bytes: &[u8]) -> Result<(), TransportError>;
    fn set_receiver(&self, receiver: Receiver);
}

struct HubInner {
    net: SimNetwork,
    receivers: BTreeMap<AgentId, Receiver>,
}

/// Shared handle over a [`SimNetwork`] that hands out per-agent endpoints.
/// Time only moves when [`SimHub::run_until`] is called.
#[derive(Clone)]
pub struct SimHub(Arc<Mutex<HubInner>>);

impl SimHub {
    pub fn new(net: SimNetwork) -> Self {
        Self(Arc::new(Mutex::new(HubInner {
            net,
            receivers: BTreeMap::new(),
        })))
    }

    pub fn endpoint(&self, id: AgentId) -> SimEndpoint {
        SimEndpoint {
            id,
            hub: self.clone(),
        }
    }

    pub fn now_ns(&self) -> u64 {
        self.0.lock().unwrap().net.now_ns()
    }

    pub fn with_network<R>(&self, f: impl FnOnce(&mut SimNetwork) -> R) -> R {
        f(&mut self.0.lock().unwrap().net)
    }

    /// Advances the clock and runs receivers for every delivery. Receivers
    /// are invoked without the hub lock held, so they may send.
    pub fn run_until(&self, t_ns: u64) -> usize {
        let batch = self.0.lock().unwrap().net.advance_to(t_ns);
        let n = batch.len();
        for d in batch {
            let receiver = self.0.lock().unwrap().receivers.remove(&d.to);
            if let Some(mut r) = receiver {
                r(d.from, d.bytes);
                self.0.lock().unwrap().receivers.entry(d.to).or_insert(r);
            }
        }
        n
    }
}

pub struct SimEndpoint {
    id: AgentId,
    hub: SimHub,
}

impl Transport for SimEndpoint {
    fn local_id(&self) -> AgentId {
        self.id
    }

    fn send(&self, to: AgentId, bytes: &[u8]) -> Result<(), TransportError> {
        let mut inner = self.hub.0.lock().unwrap();
        let now = inner.net.now_ns();
        inner.net.sim_send(self.id, to, bytes.to_vec(), now)?;
        Ok(())
    }

    fn set_receiver(&self, receiver: Receiver) {
        self.hub.0.lock().unwrap().receivers.insert(self.id, receiver);
    }
}

/// UDP on 127.0.0.1 with one port per agent: `base_port + agent_id`.
/// Arrivals are handled on a background thread.
pub struct UdpTransport {
    id: AgentId,
    base_port: u16,
    socket: UdpSocket,
    receiver: Arc<Mutex<Option<Receiver>>>,
    stop: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

fn port_for(id: AgentId, base_port: u16) -> Result<u16, TransportError> {
    base_port
        .checked_add(id)
        .ok_or(TransportError::PortRange { id, base_port })
}

impl UdpTransport {
    pub fn bind(id: AgentId, base_port: u16) -> Result<Self, TransportError> {
        let port = port_for(id, base_port)?;
        let socket = UdpSocket::bind((Ipv4Addr::LOCALHOST, port))?;
        socket.set_read_timeout(Some(Duration::from_millis(20)))?;
        let receiver: Arc<Mutex<Option<Receiver>>> = Arc::new(Mutex::new(None));
        let stop = Arc::new(AtomicBool::new(false));
        let worker = {
            let socket = socket.try_clone()?;
            let receiver = receiver.clone();
            let stop = stop.clone();
            std::thread::spawn(move || {
                let mut buf = vec![0u8; 65_535];
                while !stop.load(Ordering::Relaxed) {
                    let (len, src) = match socket.recv_from(&mut buf) {
                        Ok(r) => r,
                        Err(e)
                            if matches!(
                                e.kind(),
                                io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                            ) =>
                        {
                            continue
                        }
                        Err(_) => break,
                    };
                    let Some(from) = src.port().checked_sub(base_port) else {
                        continue;
                    };
                    if let Some(r) = receiver.lock().unwrap().as_mut() {
                        r(from, buf[..len].to_vec());
                    }
                }
            })
        };
        Ok(Self {
            id,
            base_port,
            socket,
            receiver,
            stop,
            worker: Some(worker),
        })
    }
}

impl Transport for UdpTransport {
    fn local_id(&self) -> AgentId {
        self.id
    }

    fn send(&self, to: AgentId, bytes: &[u8]) -> Result<(), TransportError> {
        let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port_for(to, self.base_port)?));
        self.socket.send_to(bytes, addr)?;
        Ok(())
    }

    fn set_receiver(&self, receiver: Receiver) {
        *self.receiver.lock().unwrap() = Some(receiver);
    }
}

impl Drop for UdpTransport {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{LinkModel, MediumModel, Topology, NS_PER_MS};
    use super::*;
    use std::sync::mpsc;

    #[test]
    fn sim_endpoints_deliver_through_receivers() {
        let topo = Topology::full_mesh(3, LinkModel::from_millis(2.0, 0.0, 0.0, 0));
        let hub = SimHub::new(SimNetwork::new(topo, MediumModel::unconstrained()).unwrap());
        let got = Arc::new(Mutex::new(Vec::new()));
        let sink = got.clone();
        hub.endpoint(2)
            .set_receiver(Box::new(move |from, bytes| sink.lock().unwrap().push((from, bytes))));
        hub.endpoint(0).send(2, b"hi").unwrap();
        hub.endpoint(1).send(2, b"yo").unwrap();
        assert_eq!(hub.run_until(NS_PER_MS), 0);
        assert_eq!(hub.run_until(2 * NS_PER_MS), 2);
        let got = got.lock().unwrap();
        assert_eq!(got[0], (0, b"hi".to_vec()));
        assert_eq!(got[1], (1, b"yo".to_vec()));
    }

    #[test]
    fn receivers_may_reply() {
        let topo = Topology::full_mesh(2, LinkModel::from_millis(1.0, 0.0, 0.0, 0));
        let hub = SimHub::new(SimNetwork::new(topo, MediumModel::unconstrained()).unwrap());
        let echo = hub.endpoint(1);
        let replier = hub.endpoint(1);
        echo.set_receiver(Box::new(move |from, bytes| replier.send(from, &bytes).unwrap()));
        let (tx, rx) = mpsc::channel();
        hub.endpoint(0)
            .set_receiver(Box::new(move |_, bytes| tx.send(bytes).unwrap()));
        hub.endpoint(0).send(1, b"ping").unwrap();
        hub.run_until(NS_PER_MS);
        hub.run_until(2 * NS_PER_MS);
        assert_eq!(rx.try_recv().unwrap(), b"ping".to_vec());
    }

    #[test]
    fn udp_loopback_round_trip() {
        // Pick a base port unlikely to collide with other tests.
        let base = 47_600 + (std::process::id() % 500) as u16;
        let a = UdpTransport::bind(0, base).unwrap();
        let b = UdpTransport::bind(1, base).unwrap();
        let (tx, rx) = mpsc::channel();
        b.set_receiver(Box::new(move |from, bytes| tx.send((from, bytes)).unwrap()));
        a.send(1, b"hello").unwrap();
        let (from, bytes) = rx.recv_timeout(Duration::from_secs(2)).unwrap();
        assert_eq!(from, 0);
        assert_eq!(bytes, b"hello");
    }
}
