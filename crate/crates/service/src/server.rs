//! WebSocket server. Each connection owns one modeling session. An I/O
//! thread reads requests and writes frames; a worker thread executes the
//! session's requests one at a time, grows included. Cancellation is
//! handled on the I/O thread so it reaches a running grow.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use tungstenite::{Message, WebSocket};

use pcrecon_core::grow::{CancelToken, GrowProgress};
use pcrecon_core::octree::Octree;
use pcrecon_tools::script::{parse_script, Command};
use pcrecon_tools::{export_json, export_obj, Session, ViewPose};

use crate::error::{Error, Result};
use crate::lod::{select_lod, MAX_PROJECTED_SPACING_PX};
use crate::protocol::*;
use crate::queue::{Popped, ProgressQueue};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceConfig {
    /// Undelivered progress frames kept per grow.
    pub progress_buffer: usize,
    /// How long the I/O thread waits for a request before flushing output.
    pub poll: Duration,
    pub max_projected_spacing_px: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            progress_buffer: 4,
            poll: Duration::from_millis(5),
            max_projected_spacing_px: MAX_PROJECTED_SPACING_PX,
        }
    }
}

struct Shared {
    clouds: BTreeMap<String, Arc<Octree>>,
    cfg: ServiceConfig,
    next_session: AtomicU64,
}

pub struct Service {
    clouds: BTreeMap<String, Arc<Octree>>,
    cfg: ServiceConfig,
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections. Open connections run until closed.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks while the server runs.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Service {
    pub fn new(cfg: ServiceConfig) -> Self {
        Self {
            clouds: BTreeMap::new(),
            cfg,
        }
    }

    pub fn add_cloud(&mut self, name: impl Into<String>, tree: Arc<Octree>) {
        self.clouds.insert(name.into(), tree);
    }

    pub fn spawn(self, addr: impl ToSocketAddrs) -> Result<ServerHandle> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let shared = Arc::new(Shared {
            clouds: self.clouds,
            cfg: self.cfg,
            next_session: AtomicU64::new(1),
        });
        let flag = stop.clone();
        let thread = thread::spawn(move || accept_loop(listener, shared, flag));
        Ok(ServerHandle {
            addr,
            stop,
            thread: Some(thread),
        })
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, _)) => {
                let shared = shared.clone();
                thread::spawn(move || {
                    if let Err(e) = serve_connection(stream, shared) {
                        log::debug!("connection closed: {e}");
                    }
                });
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(10))
            }
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(10));
            }
        }
    }
}

enum Outgoing {
    Frame(Message),
    /// Frames of a running grow; later entries wait until its terminal frame.
    Grow(Arc<ProgressQueue<Message>>),
}

type Outbox = Arc<Mutex<VecDeque<Outgoing>>>;

struct Job {
    req: Option<u64>,
    body: Request,
    grow: Option<(u64, CancelToken)>,
}

fn text(req: Option<u64>, body: Response) -> Message {
    Message::text(ServerFrame::new(req, body).to_json())
}

fn error(req: Option<u64>, code: ErrorCode, message: impl Into<String>) -> Message {
    text(
        req,
        Response::Error {
            code,
            message: message.into(),
        },
    )
}

fn timed_out(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io)
        if matches!(io.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut))
}

fn serve_connection(stream: TcpStream, shared: Arc<Shared>) -> Result<()> {
    stream.set_nonblocking(false)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| Error::Handshake(e.to_string()))?;
    ws.get_ref().set_read_timeout(Some(shared.cfg.poll))?;

    let outbox: Outbox = Arc::default();
    let cancels: Arc<Mutex<HashMap<u64, CancelToken>>> = Arc::default();
    let (tx, rx) = mpsc::channel::<Job>();
    let worker = {
        let (shared, outbox, cancels) = (shared.clone(), outbox.clone(), cancels.clone());
        thread::spawn(move || run_worker(rx, shared, outbox, cancels))
    };
    let mut next_grow = 1u64;

    let mut io = || -> Result<()> {
        loop {
            match ws.read() {
                Ok(Message::Text(t)) => {
                    let frame: ClientFrame = match serde_json::from_str(t.as_str()) {
                        Ok(f) => f,
                        Err(e) => {
                            ws.send(error(None, ErrorCode::BadRequest, e.to_string()))?;
                            continue;
                        }
                    };
                    if frame.v != PROTOCOL_VERSION {
                        let msg = format!(
                            "protocol version {} not supported, expected {PROTOCOL_VERSION}",
                            frame.v
                        );
                        ws.send(error(frame.req, ErrorCode::Version, msg))?;
                        continue;
                    }
                    match frame.body {
                        Request::Cancel { grow } => {
                            let reply = if grow > 0 && grow < next_grow {
                                if let Some(t) = cancels.lock().unwrap().get(&grow) {
                                    t.cancel();
                                }
                                text(frame.req, Response::CancelAck { grow })
                            } else {
                                error(frame.req, ErrorCode::UnknownId, format!("no grow {grow}"))
                            };
                            ws.send(reply)?;
                        }
                        body => {
                            let grow = matches!(body, Request::Grow { .. }).then(|| {
                                let token = CancelToken::new();
                                cancels.lock().unwrap().insert(next_grow, token.clone());
                                next_grow += 1;
                                (next_grow - 1, token)
                            });
                            let _ = tx.send(Job {
                                req: frame.req,
                                body,
                                grow,
                            });
                        }
                    }
                }
                Ok(Message::Binary(_)) => ws.send(error(
                    None,
                    ErrorCode::BadRequest,
                    "unexpected binary message",
                ))?,
                Ok(Message::Close(_)) => return Ok(()),
                Ok(_) => {}
                Err(e) if timed_out(&e) => {}
                Err(tungstenite::Error::ConnectionClosed)
                | Err(tungstenite::Error::AlreadyClosed) => return Ok(()),
                Err(e) => return Err(e.into()),
            }
            flush(&mut ws, &outbox)?;
        }
    };
    let result = io();
    for t in cancels.lock().unwrap().values() {
        t.cancel();
    }
    drop(tx);
    let _ = worker.join();
    result
}

fn flush(ws: &mut WebSocket<TcpStream>, outbox: &Outbox) -> Result<()> {
    loop {
        let next = {
            let mut q = outbox.lock().unwrap();
            match q.front() {
                None => return Ok(()),
                Some(Outgoing::Frame(_)) => match q.pop_front() {
                    Some(Outgoing::Frame(m)) => m,
                    _ => unreachable!(),
                },
                Some(Outgoing::Grow(g)) => match g.pop() {
                    Popped::Frame(m) => m,
                    Popped::Terminal(m) => {
                        q.pop_front();
                        m
                    }
                    Popped::Done => {
                        q.pop_front();
                        continue;
                    }
                    Popped::Empty => return Ok(()),
                },
            }
        };
        ws.send(next)?;
    }
}

struct Worker {
    shared: Arc<Shared>,
    outbox: Outbox,
    session: Option<Session>,
}

impl Worker {
    fn push(&self, m: Message) {
        self.outbox.lock().unwrap().push_back(Outgoing::Frame(m));
    }

    fn handle(&mut self, req: Option<u64>, body: Request, grow: Option<(u64, CancelToken)>) {
        if let Request::Open { cloud } = &body {
            let reply = self.open(req, cloud);
            return self.push(reply);
        }
        let outbox = self.outbox.clone();
        let push = |m: Message| outbox.lock().unwrap().push_back(Outgoing::Frame(m));
        let Some(session) = self.session.as_mut() else {
            if let Some((id, _)) = grow {
                return push(grow_failed(
                    req,
                    id,
                    ErrorCode::Session,
                    "open a cloud first",
                ));
            }
            return push(error(req, ErrorCode::Session, "open a cloud first"));
        };
        match body {
            Request::Open { .. } | Request::Cancel { .. } => unreachable!("handled elsewhere"),
            Request::View { pose } => session.view = pose,
            Request::Cells { pose, budget } => {
                session.view = pose;
                let tree = session.tree().clone();
                let cells = select_lod(
                    &tree,
                    &pose,
                    budget,
                    self.shared.cfg.max_projected_spacing_px,
                );
                let mut points = 0u64;
                for idx in &cells {
                    let blob = match tree.cell_blob(idx) {
                        Ok(b) => b,
                        Err(e) => return push(error(req, ErrorCode::Failed, e.to_string())),
                    };
                    points += tree.meta(idx).map_or(0, |m| m.payload as u64);
                    let header = CellHeader {
                        v: PROTOCOL_VERSION,
                        req,
                        cell: *idx,
                        bounds: tree.cell_bounds(idx),
                        offset: tree.manifest().offset,
                    };
                    push(Message::binary(encode_cell_frame(&header, &blob)));
                }
                push(text(
                    req,
                    Response::CellsDone {
                        cells: cells.len(),
                        points,
                    },
                ));
            }
            Request::Pick { pose, cursor } => {
                session.view = pose;
                let reply = match session.pick(cursor) {
                    Ok(snap) => text(req, Response::Picked { snap }),
                    Err(e) => error(req, ErrorCode::Failed, e.to_string()),
                };
                push(reply);
            }
            Request::Grow { seed, overrides } => {
                let (id, cancel) = grow.expect("grow requests carry an id");
                let params = match session.grow_params(seed.position, &overrides) {
                    Ok(p) => p,
                    Err(e) => return push(grow_failed(req, id, ErrorCode::Failed, e.to_string())),
                };
                let queue = Arc::new(ProgressQueue::new(self.shared.cfg.progress_buffer));
                {
                    let mut out = outbox.lock().unwrap();
                    out.push_back(Outgoing::Frame(text(
                        req,
                        Response::GrowStarted { grow: id, params },
                    )));
                    out.push_back(Outgoing::Grow(queue.clone()));
                }
                let mut seq = 0u64;
                let mut progress = |p: &GrowProgress| {
                    seq += 1;
                    queue.push(text(
                        req,
                        Response::Progress {
                            grow: id,
                            seq,
                            cells_processed: p.cells_processed,
                            segments: p.segments.iter().map(|s| s.summary()).collect(),
                        },
                    ));
                };
                let terminal = match session.grow_report(
                    seed.position,
                    &overrides,
                    &cancel,
                    Some(&mut progress),
                ) {
                    Ok(report) => text(
                        req,
                        Response::GrowDone {
                            grow: id,
                            terminal: true,
                            report,
                        },
                    ),
                    Err(e) => grow_failed(req, id, ErrorCode::Failed, e.to_string()),
                };
                queue.finish(terminal);
            }
            Request::Tool { op, args } => {
                let reply = match tool(session, op, &args) {
                    Ok(delta) => text(
                        req,
                        Response::Delta {
                            delta,
                            features: session.features.clone(),
                        },
                    ),
                    Err((code, msg)) => error(req, code, msg),
                };
                push(reply);
            }
            Request::Export { format } => {
                let data = match format {
                    ExportFormat::Obj => export_obj(&session.document),
                    ExportFormat::Json => export_json(&session.document),
                };
                let reply = match data {
                    Ok(data) => text(req, Response::Exported { format, data }),
                    Err(e) => error(req, ErrorCode::Failed, e.to_string()),
                };
                push(reply);
            }
        }
    }

    fn open(&mut self, req: Option<u64>, cloud: &str) -> Message {
        if self.session.is_some() {
            return error(req, ErrorCode::Session, "session already open");
        }
        let Some(tree) = self.shared.clouds.get(cloud) else {
            return error(
                req,
                ErrorCode::UnknownCloud,
                format!("no cloud named {cloud:?}"),
            );
        };
        let view = match ViewPose::synthetic(tree.root_bounds().center()) {
            Ok(v) => v,
            Err(e) => return error(req, ErrorCode::Failed, e.to_string()),
        };
        self.session = Some(Session::new(tree.clone(), view));
        text(
            req,
            Response::Opened {
                session: self.shared.next_session.fetch_add(1, Ordering::Relaxed),
                manifest: tree.manifest().clone(),
            },
        )
    }
}

fn grow_failed(
    req: Option<u64>,
    grow: u64,
    code: ErrorCode,
    message: impl Into<String>,
) -> Message {
    text(
        req,
        Response::GrowFailed {
            grow,
            terminal: true,
            code,
            message: message.into(),
        },
    )
}

fn tool(
    session: &mut Session,
    op: ToolOp,
    args: &str,
) -> std::result::Result<pcrecon_tools::Delta, (ErrorCode, String)> {
    let failed = |e: pcrecon_tools::Error| (ErrorCode::Failed, e.to_string());
    let steps = parse_script(&format!("{} {args}", op.keyword()))
        .map_err(|e| (ErrorCode::BadRequest, e.to_string()))?;
    let Some(step) = steps.first() else {
        return Err((ErrorCode::BadRequest, "empty tool request".into()));
    };
    let missing = |e: pcrecon_tools::Error| match e {
        pcrecon_tools::Error::UnknownId { .. } => (ErrorCode::UnknownId, e.to_string()),
        e => failed(e),
    };
    match &step.command {
        Command::Construct(v) => session.construct(v).map_err(missing),
        Command::Translate { polygon, by, copy } => {
            session.translate(*polygon, by, *copy).map_err(missing)
        }
        Command::Extrude { polygon, dir, stop } => {
            session.extrude(*polygon, dir, stop).map_err(missing)
        }
        _ => Err((
            ErrorCode::BadRequest,
            format!("{} is not a tool", op.keyword()),
        )),
    }
}

fn run_worker(
    rx: Receiver<Job>,
    shared: Arc<Shared>,
    outbox: Outbox,
    cancels: Arc<Mutex<HashMap<u64, CancelToken>>>,
) {
    let mut w = Worker {
        shared,
        outbox,
        session: None,
    };
    for job in rx {
        let id = job.grow.as_ref().map(|(id, _)| *id);
        w.handle(job.req, job.body, job.grow);
        if let Some(id) = id {
            cancels.lock().unwrap().remove(&id);
        }
    }
}
