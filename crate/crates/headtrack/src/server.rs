//! Line-delimited JSON TCP server: one independent filter session per
//! connection.
//!
//! Protocol, one frame per line:
//!
//! ```text
//! -> {"t": 0.0,  "pitch": 1.0, "yaw": 2.0, "roll": 3.0}
//! <- {"t": 0.0,  "pitch": 1.0, "yaw": 2.0, "roll": 3.0, "vp": 0.0, "vy": 0.0, "vr": 0.0}
//! -> {"t": 0.033, "pitch": 1.2, "yaw": 1.9, "roll": 3.1}
//! <- {"t": 0.033, "pitch": 1.01, ...}
//! ```
//!
//! The first frame of a connection initializes that connection's session and
//! is answered with the initialized pose; later frames are filtered. A
//! malformed or rejected line is answered with `{"error": "..."}` and the
//! session continues. Closing the connection discards the session.
//!
//! Sessions are built from the same blueprint the offline pipeline uses, so
//! replaying a recorded file over a socket reproduces the pipeline's
//! posteriors exactly.

use crate::config::{RunConfig, SessionBlueprint};
use crate::kalman::FilterSession;
use crate::pose::StateVector;
use crate::stream::JsonFrame;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};

/// Successful per-frame reply: posterior pose plus angular velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorLine {
    pub t: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
    pub vp: f64,
    pub vy: f64,
    pub vr: f64,
}

impl PosteriorLine {
    fn new(t: f64, state: &StateVector) -> Self {
        Self {
            t,
            pitch: state.pose.pitch,
            yaw: state.pose.yaw,
            roll: state.pose.roll,
            vp: state.velocity[0],
            vy: state.velocity[1],
            vr: state.velocity[2],
        }
    }
}

/// One reply line: either a posterior or a non-fatal error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerReply {
    Posterior(PosteriorLine),
    Error { error: String },
}

/// TCP frame server. Bind, optionally read the bound address, then `run`.
pub struct FrameServer {
    listener: TcpListener,
    blueprint: SessionBlueprint,
}

impl FrameServer {
    /// Bind and resolve the session blueprint eagerly so configuration
    /// problems surface before the first connection.
    pub fn bind(addr: &str, config: &RunConfig) -> Result<Self> {
        let blueprint = config.blueprint()?;
        let listener = TcpListener::bind(addr)
            .map_err(|e| Error::Config(format!("cannot bind {addr}: {e}")))?;
        Ok(Self {
            listener,
            blueprint,
        })
    }

    /// Bind to the address configured under `io.listen`.
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        Self::bind(config.listen_address()?, config)
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accept connections forever, one handler thread per connection.
    pub fn run(self) -> Result<()> {
        for incoming in self.listener.incoming() {
            match incoming {
                Ok(stream) => {
                    let blueprint = self.blueprint.clone();
                    std::thread::spawn(move || {
                        // Connection teardown is not an error worth surfacing.
                        let _ = handle_connection(stream, &blueprint);
                    });
                }
                Err(_) => continue,
            }
        }
        Ok(())
    }
}

fn process_line(
    line: &str,
    session: &mut Option<FilterSession>,
    blueprint: &SessionBlueprint,
) -> ServerReply {
    let frame: JsonFrame = match serde_json::from_str(line) {
        Ok(frame) => frame,
        Err(e) => {
            return ServerReply::Error {
                error: format!("malformed frame: {e}"),
            }
        }
    };
    let record = match frame.into_record() {
        Ok(record) => record,
        Err(e) => {
            return ServerReply::Error {
                error: e.to_string(),
            }
        }
    };
    let state = match session.as_mut() {
        None => match blueprint.session(record.pose, record.t) {
            Ok(new) => {
                let state = *new.state();
                *session = Some(new);
                state
            }
            Err(e) => {
                return ServerReply::Error {
                    error: e.to_string(),
                }
            }
        },
        Some(live) => match live.step(&record) {
            Ok(state) => state,
            Err(e) => {
                return ServerReply::Error {
                    error: e.to_string(),
                }
            }
        },
    };
    ServerReply::Posterior(PosteriorLine::new(record.t, &state))
}

fn handle_connection(stream: TcpStream, blueprint: &SessionBlueprint) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut session: Option<FilterSession> = None;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = process_line(&line, &mut session, blueprint);
        serde_json::to_writer(&mut writer, &reply)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}
