//! External policies over newline-delimited JSON, either a child process
//! on stdio or a TCP peer. One connection per episode.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use tabletop_core::episode::Termination;
use tabletop_core::policy::protocol::{encode_message, Session};
use tabletop_core::policy::{EpisodeContext, Policy, PolicyInput};
use tabletop_core::sim::Action;
use tabletop_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Shell command whose stdin and stdout carry the session.
    Stdio(String),
    /// `host:port`
    Tcp(String),
}

enum Recv {
    Line(String),
    Timeout,
    Closed,
}

enum Conn {
    Stdio { child: Child, stdin: Option<ChildStdin>, lines: Receiver<String> },
    Tcp { writer: TcpStream, reader: BufReader<TcpStream> },
}

impl Conn {
    fn open(endpoint: &Endpoint, timeout: Duration) -> std::io::Result<Self> {
        match endpoint {
            Endpoint::Stdio(cmd) => {
                let mut child =
                    Command::new("sh").arg("-c").arg(cmd).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
                let stdin = child.stdin.take();
                let stdout = child.stdout.take().expect("stdout is piped");
                let (tx, lines) = mpsc::channel();
                std::thread::spawn(move || {
                    let mut r = BufReader::new(stdout);
                    loop {
                        let mut line = String::new();
                        match r.read_line(&mut line) {
                            Ok(0) | Err(_) => break,
                            Ok(_) => {
                                if tx.send(line).is_err() {
                                    break;
                                }
                            }
                        }
                    }
                });
                Ok(Conn::Stdio { child, stdin, lines })
            }
            Endpoint::Tcp(addr) => {
                let mut last = std::io::Error::new(std::io::ErrorKind::NotFound, format!("{addr} resolves to nothing"));
                for a in addr.to_socket_addrs()? {
                    match TcpStream::connect_timeout(&a, timeout) {
                        Ok(s) => {
                            s.set_nodelay(true)?;
                            let reader = BufReader::new(s.try_clone()?);
                            return Ok(Conn::Tcp { writer: s, reader });
                        }
                        Err(e) => last = e,
                    }
                }
                Err(last)
            }
        }
    }

    fn send(&mut self, line: &str) -> std::io::Result<()> {
        match self {
            Conn::Stdio { stdin: Some(w), .. } => {
                w.write_all(line.as_bytes())?;
                w.flush()
            }
            Conn::Stdio { stdin: None, .. } => Err(std::io::ErrorKind::BrokenPipe.into()),
            Conn::Tcp { writer, .. } => {
                writer.write_all(line.as_bytes())?;
                writer.flush()
            }
        }
    }

    fn recv(&mut self, timeout: Duration) -> Recv {
        match self {
            Conn::Stdio { lines, .. } => match lines.recv_timeout(timeout) {
                Ok(l) => Recv::Line(l),
                Err(RecvTimeoutError::Timeout) => Recv::Timeout,
                Err(RecvTimeoutError::Disconnected) => Recv::Closed,
            },
            Conn::Tcp { reader, .. } => {
                if reader.get_ref().set_read_timeout(Some(timeout.max(Duration::from_millis(1)))).is_err() {
                    return Recv::Closed;
                }
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => Recv::Closed,
                    Ok(_) => Recv::Line(line),
                    Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                        Recv::Timeout
                    }
                    Err(_) => Recv::Closed,
                }
            }
        }
    }

    fn close(&mut self) {
        match self {
            Conn::Stdio { child, stdin, .. } => {
                stdin.take();
                for _ in 0..50 {
                    if let Ok(Some(_)) = child.try_wait() {
                        return;
                    }
                    std::thread::sleep(Duration::from_millis(10));
                }
                let _ = child.kill();
                let _ = child.wait();
            }
            Conn::Tcp { writer, .. } => {
                let _ = writer.shutdown(std::net::Shutdown::Both);
            }
        }
    }
}

impl Drop for Conn {
    fn drop(&mut self) {
        if let Conn::Stdio { child, .. } = self {
            if let Ok(None) = child.try_wait() {
                let _ = child.kill();
                let _ = child.wait();
            }
        }
    }
}

/// A policy on the far side of a transport.
pub struct ExternalPolicy {
    endpoint: Endpoint,
    name: String,
    timeout: Duration,
    session: Session,
    conn: Option<Conn>,
}

impl ExternalPolicy {
    pub fn new(endpoint: Endpoint, name: &str) -> Self {
        Self { endpoint, name: name.into(), timeout: Duration::from_secs(10), session: Session::default(), conn: None }
    }

    fn conn(&mut self) -> Result<&mut Conn> {
        self.conn.as_mut().ok_or_else(|| Error::Protocol("no open session".into()))
    }
}

impl Policy for ExternalPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn begin(&mut self, ctx: &EpisodeContext<'_>) -> Result<()> {
        self.timeout = Duration::from_millis(ctx.cfg.action_timeout_ms);
        self.session = Session::default();
        if let Some(mut c) = self.conn.take() {
            c.close();
        }
        let mut conn = Conn::open(&self.endpoint, self.timeout).map_err(|e| Error::HandshakeFailed(e.to_string()))?;
        let hello = self.session.hello(&ctx.variation.instruction, ctx.fidelity);
        conn.send(&encode_message(&hello)).map_err(|e| Error::HandshakeFailed(e.to_string()))?;
        match conn.recv(self.timeout) {
            Recv::Line(l) => self.session.accept_hello_ack(&l)?,
            Recv::Timeout => return Err(Error::HandshakeFailed("no hello_ack in time".into())),
            Recv::Closed => return Err(Error::HandshakeFailed("policy closed before hello_ack".into())),
        }
        self.conn = Some(conn);
        Ok(())
    }

    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        let line = encode_message(&self.session.observe(input.observation));
        let timeout = self.timeout;
        let conn = self.conn()?;
        conn.send(&line).map_err(|e| Error::Protocol(format!("send failed: {e}")))?;
        match conn.recv(timeout) {
            Recv::Line(l) => self.session.accept_act(&l),
            Recv::Timeout => Err(Error::PolicyTimeout),
            Recv::Closed => Err(Error::Protocol("policy closed the connection".into())),
        }
    }

    fn end(&mut self, reason: Termination, success: bool) -> Result<()> {
        let line = encode_message(&self.session.episode_end(reason, success));
        if let Some(mut c) = self.conn.take() {
            let _ = c.send(&line);
            c.close();
        }
        Ok(())
    }
}
