//! Out-of-process denoisers speaking a framed binary protocol on the child's
//! standard input and output.
//!
//! Frame layout, all little-endian:
//!
//! ```text
//! b"PNDZ" | u32 length | u64 count | count × f64
//! ```
//!
//! `length` counts the bytes after the length field (`8 + 8·count`). Each
//! request frame is answered by exactly one response frame, in order.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::Denoiser;
use crate::error::{Error, Result};
use crate::model::ImageVector;

pub const FRAME_MAGIC: [u8; 4] = *b"PNDZ";

/// Writes one frame and flushes.
pub fn write_frame<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    let count = values.len() as u64;
    let length = 8 + 8 * count;
    let length = u32::try_from(length)
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&FRAME_MAGIC)?;
    w.write_all(&length.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

/// Reads one frame. Returns `Ok(None)` on a clean end of stream before the
/// first byte.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<f64>>> {
    let mut magic = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        let k = r.read(&mut magic[filled..])?;
        if k == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        filled += k;
    }
    if magic != FRAME_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad frame magic"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let length = u32::from_le_bytes(word) as u64;
    let mut long = [0u8; 8];
    r.read_exact(&mut long)?;
    let count = u64::from_le_bytes(long);
    if length != 8 + 8 * count {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame length {length} inconsistent with count {count}"),
        ));
    }
    let mut values = Vec::with_capacity(count as usize);
    for _ in 0..count {
        r.read_exact(&mut long)?;
        values.push(f64::from_le_bytes(long));
    }
    Ok(Some(values))
}

struct Connection {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    responses: Receiver<io::Result<Vec<f64>>>,
    /// Set after a timeout or protocol error: the stream can no longer be
    /// matched to requests.
    broken: bool,
}

/// A denoiser running as a child process.
///
/// Requests on one instance are serialised; concurrent chains should each
/// spawn their own endpoint.
pub struct ExternalDenoiser {
    conn: Mutex<Connection>,
    epsilon: f64,
    timeout: Duration,
}

impl ExternalDenoiser {
    pub fn spawn(
        program: impl AsRef<Path>,
        args: &[String],
        epsilon: f64,
        timeout: Duration,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "denoiser noise level must be positive, got {epsilon}"
            )));
        }
        let mut child = Command::new(program.as_ref())
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let msg = match read_frame(&mut reader) {
                    Ok(Some(values)) => Ok(values),
                    Ok(None) => Err(io::Error::new(
                        io::ErrorKind::UnexpectedEof,
                        "endpoint closed its output",
                    )),
                    Err(e) => Err(e),
                };
                let stop = msg.is_err();
                if tx.send(msg).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self {
            conn: Mutex::new(Connection {
                child,
                stdin: BufWriter::new(stdin),
                responses: rx,
                broken: false,
            }),
            epsilon,
            timeout,
        })
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }
}

impl Denoiser for ExternalDenoiser {
    fn apply(&self, x: &ImageVector) -> Result<ImageVector> {
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        if conn.broken {
            return Err(Error::Protocol(
                "connection unusable after an earlier failure".into(),
            ));
        }
        if let Err(e) = write_frame(&mut conn.stdin, x.as_slice()) {
            conn.broken = true;
            return Err(Error::Protocol(format!("sending request: {e}")));
        }
        let values = match conn.responses.recv_timeout(self.timeout) {
            Ok(Ok(values)) => values,
            Ok(Err(e)) => {
                conn.broken = true;
                return Err(Error::Protocol(format!("reading response: {e}")));
            }
            Err(RecvTimeoutError::Timeout) => {
                conn.broken = true;
                return Err(Error::DenoiserTimeout(self.timeout));
            }
            Err(RecvTimeoutError::Disconnected) => {
                conn.broken = true;
                return Err(Error::Protocol("endpoint reader stopped".into()));
            }
        };
        if values.len() != x.len() {
            return Err(Error::DenoiserShapeMismatch {
                expected: x.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DenoiserNonFinite { index });
        }
        x.with_data(values)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Drop for ExternalDenoiser {
    fn drop(&mut self) {
        let conn = self.conn.get_mut().unwrap_or_else(|e| e.into_inner());
        let _ = conn.child.kill();
        let _ = conn.child.wait();
    }
}
