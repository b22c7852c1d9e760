use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use super::config::TraceConfig;
use crate::error::{Error, Result};

pub const MAC_HEADER: &str = "time_us,cc_id,ue_id,mcs,tb_bytes,harq_attempt,outcome,cell_id,rat";
pub const RLC_HEADER: &str = "time_us,leg,cc_id,bearer_id,event,sn,bytes";
pub const DC_HEADER: &str = "time_us,ue_id,event,detail";
pub const CHANNEL_HEADER: &str = "time_us,cc_id,ue_id,pathloss_db,blocked,wideband_sinr_db,cell_id,rat";

/// Simulation time in whole microseconds, as written to every trace.
pub fn time_us(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

/// In-memory sink that can be read back after the run.
#[derive(Debug, Clone, Default)]
pub struct SharedBuffer(Arc<Mutex<Vec<u8>>>);

impl SharedBuffer {
    pub fn contents(&self) -> String {
        String::from_utf8(self.0.lock().expect("trace buffer poisoned").clone()).expect("traces are UTF-8")
    }
}

impl Write for SharedBuffer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().expect("trace buffer poisoned").extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Handles to the four in-memory traces of one run.
#[derive(Debug, Clone, Default)]
pub struct MemoryTraces {
    pub mac: SharedBuffer,
    pub rlc: SharedBuffer,
    pub dc: SharedBuffer,
    pub channel: SharedBuffer,
}

struct Sink {
    name: String,
    out: Box<dyn Write + Send>,
}

impl Sink {
    fn new(name: impl Into<String>, header: &str, mut out: Box<dyn Write + Send>) -> Result<Self> {
        let name = name.into();
        writeln!(out, "{header}").map_err(|e| Error::io(&name, e))?;
        Ok(Sink { name, out })
    }
}

/// CSV trace output for one run. Kinds that are switched off cost nothing.
pub struct TraceWriter {
    mac: Option<Sink>,
    rlc: Option<Sink>,
    dc: Option<Sink>,
    channel: Option<Sink>,
    control_rows: bool,
}

macro_rules! row {
    ($sink:expr, $($arg:tt)*) => {
        if let Some(s) = $sink.as_mut() {
            writeln!(s.out, $($arg)*).map_err(|e| Error::io(&s.name, e))?;
        }
    };
}

impl TraceWriter {
    pub fn disabled() -> Self {
        TraceWriter {
            mac: None,
            rlc: None,
            dc: None,
            channel: None,
            control_rows: false,
        }
    }

    /// `run-<k>-{mac,rlc,dc,channel}.csv` in `dir`.
    pub fn to_dir(dir: &Path, run_index: u32, cfg: &TraceConfig) -> Result<Self> {
        let open = |kind: &str, header: &str, on: bool| -> Result<Option<Sink>> {
            if !on {
                return Ok(None);
            }
            let path = dir.join(format!("run-{run_index}-{kind}.csv"));
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            Sink::new(path.display().to_string(), header, Box::new(BufWriter::new(f))).map(Some)
        };
        Ok(TraceWriter {
            mac: open("mac", MAC_HEADER, cfg.mac)?,
            rlc: open("rlc", RLC_HEADER, cfg.rlc)?,
            dc: open("dc", DC_HEADER, cfg.dc)?,
            channel: open("channel", CHANNEL_HEADER, cfg.channel)?,
            control_rows: cfg.control_rows,
        })
    }

    pub fn in_memory(cfg: &TraceConfig) -> Result<(Self, MemoryTraces)> {
        let m = MemoryTraces::default();
        let open = |name: &str, header: &str, buf: &SharedBuffer, on: bool| -> Result<Option<Sink>> {
            if on {
                Sink::new(name, header, Box::new(buf.clone())).map(Some)
            } else {
                Ok(None)
            }
        };
        let w = TraceWriter {
            mac: open("mac", MAC_HEADER, &m.mac, cfg.mac)?,
            rlc: open("rlc", RLC_HEADER, &m.rlc, cfg.rlc)?,
            dc: open("dc", DC_HEADER, &m.dc, cfg.dc)?,
            channel: open("channel", CHANNEL_HEADER, &m.channel, cfg.channel)?,
            control_rows: cfg.control_rows,
        };
        Ok((w, m))
    }

    pub fn channel_enabled(&self) -> bool {
        self.channel.is_some()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn mac_data(
        &mut self,
        t: f64,
        cc_id: u8,
        ue_id: u32,
        mcs: u8,
        tb_bytes: u32,
        attempt: u8,
        outcome: &str,
        cell_id: u32,
        rat: &str,
    ) -> Result<()> {
        row!(
            self.mac,
            "{},{cc_id},{ue_id},{mcs},{tb_bytes},{attempt},{outcome},{cell_id},{rat}",
            time_us(t)
        );
        Ok(())
    }

    /// Control-plane message on a carrier: `outcome` reads `CTRL:<kind>`.
    pub fn mac_control(&mut self, t: f64, cc_id: u8, ue_id: u32, kind: &str, cell_id: u32, rat: &str) -> Result<()> {
        if self.control_rows {
            row!(self.mac, "{},{cc_id},{ue_id},,,,CTRL:{kind},{cell_id},{rat}", time_us(t));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn rlc(
        &mut self,
        t: f64,
        leg: &str,
        cc_id: Option<u8>,
        bearer_id: u32,
        event: &str,
        sn: Option<u64>,
        bytes: u32,
    ) -> Result<()> {
        if let Some(s) = self.rlc.as_mut() {
            let cc = cc_id.map_or(-1, i32::from);
            let res = match sn {
                Some(sn) => writeln!(s.out, "{},{leg},{cc},{bearer_id},{event},{sn},{bytes}", time_us(t)),
                None => writeln!(s.out, "{},{leg},{cc},{bearer_id},{event},,{bytes}", time_us(t)),
            };
            res.map_err(|e| Error::io(&s.name, e))?;
        }
        Ok(())
    }

    pub fn dc(&mut self, t: f64, ue_id: u32, event: &str, detail: &str) -> Result<()> {
        row!(self.dc, "{},{ue_id},{event},{detail}", time_us(t));
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn channel(
        &mut self,
        t: f64,
        cc_id: u8,
        ue_id: u32,
        pathloss_db: f64,
        blocked: bool,
        sinr_db: f64,
        cell_id: u32,
        rat: &str,
    ) -> Result<()> {
        row!(
            self.channel,
            "{},{cc_id},{ue_id},{pathloss_db:.4},{},{sinr_db:.4},{cell_id},{rat}",
            time_us(t),
            u8::from(blocked)
        );
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        for s in [&mut self.mac, &mut self.rlc, &mut self.dc, &mut self.channel]
            .into_iter()
            .flatten()
        {
            s.out.flush().map_err(|e| Error::io(&s.name, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_traces_carry_headers_and_rows() {
        let (mut w, m) = TraceWriter::in_memory(&TraceConfig::default()).unwrap();
        w.mac_data(0.0012345, 1, 0, 7, 1000, 1, "ACK", 0, "MMWAVE").unwrap();
        w.rlc(0.5, "MMWAVE", None, 3, "deliver", Some(9), 1500).unwrap();
        w.flush().unwrap();
        assert_eq!(m.mac.contents(), format!("{MAC_HEADER}\n1235,1,0,7,1000,1,ACK,0,MMWAVE\n"));
        assert_eq!(m.rlc.contents(), format!("{RLC_HEADER}\n500000,MMWAVE,-1,3,deliver,9,1500\n"));
    }

    #[test]
    fn disabled_kinds_write_nothing() {
        let cfg = TraceConfig {
            channel: false,
            control_rows: false,
            ..TraceConfig::default()
        };
        let (mut w, m) = TraceWriter::in_memory(&cfg).unwrap();
        w.channel(0.0, 0, 0, 100.0, false, 3.0, 0, "MMWAVE").unwrap();
        w.mac_control(0.0, 0, 0, "BSR", 0, "MMWAVE").unwrap();
        assert_eq!(m.channel.contents(), "");
        assert_eq!(m.mac.contents(), format!("{MAC_HEADER}\n"));
    }
}
