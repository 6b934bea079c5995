//! Measured operating points and their CSV form.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the results file.
pub const CSV_HEADER: &str = "detector,K,ebn0_db,bits,bit_errors,frames,frame_errors,ber,fer,seed";

/// One measured operating point.
///
/// `elapsed` is wall-clock time; it is not written to CSV and is ignored by
/// `==`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimRecord {
    pub detector: String,
    #[serde(rename = "K")]
    pub n_users: usize,
    pub ebn0_db: f64,
    #[serde(rename = "bits")]
    pub bits_sent: u64,
    pub bit_errors: u64,
    #[serde(rename = "frames")]
    pub frames_sent: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub seed: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl PartialEq for SimRecord {
    fn eq(&self, o: &Self) -> bool {
        self.detector == o.detector
            && self.n_users == o.n_users
            && self.ebn0_db.to_bits() == o.ebn0_db.to_bits()
            && self.bits_sent == o.bits_sent
            && self.bit_errors == o.bit_errors
            && self.frames_sent == o.frames_sent
            && self.frame_errors == o.frame_errors
            && self.ber.to_bits() == o.ber.to_bits()
            && self.fer.to_bits() == o.fer.to_bits()
            && self.seed == o.seed
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

impl SimRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        detector: String,
        n_users: usize,
        ebn0_db: f64,
        bits_sent: u64,
        bit_errors: u64,
        frames_sent: u64,
        frame_errors: u64,
        seed: u64,
        elapsed: Duration,
    ) -> Self {
        SimRecord {
            detector,
            n_users,
            ebn0_db,
            bits_sent,
            bit_errors,
            frames_sent,
            frame_errors,
            ber: ratio(bit_errors, bits_sent),
            fer: ratio(frame_errors, frames_sent),
            seed,
            elapsed,
        }
    }

    /// Checks the count and rate invariants.
    pub fn validate(&self) -> Result<()> {
        let ok = self.bit_errors <= self.bits_sent
            && self.frame_errors <= self.frames_sent
            && self.ber == ratio(self.bit_errors, self.bits_sent)
            && self.fer == ratio(self.frame_errors, self.frames_sent);
        if ok {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "inconsistent record for {} K={} at {} dB",
                self.detector, self.n_users, self.ebn0_db
            )))
        }
    }
}

fn check_header(path: &Path) -> Result<bool> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    let first = first.trim_end_matches(['\r', '\n']);
    if first.is_empty() {
        return Ok(false);
    }
    if first != CSV_HEADER {
        return Err(Error::Format(format!(
            "{}: header '{first}' does not match '{CSV_HEADER}'",
            path.display()
        )));
    }
    Ok(true)
}

/// Appends records to a results file, writing the header only when the file
/// is new or empty. Every record is flushed as soon as it is written.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl RecordWriter<File> {
    pub fn append(path: &Path) -> Result<Self> {
        let has_header = path.exists() && check_header(path)?;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = Self::new(file);
        if !has_header {
            w.write_header()?;
        }
        Ok(w)
    }
}

impl<W: Write> RecordWriter<W> {
    /// Writer without a header row; see [`RecordWriter::write_header`].
    pub fn new(inner: W) -> Self {
        RecordWriter {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(inner),
        }
    }

    pub fn write_header(&mut self) -> Result<()> {
        self.inner.write_record(CSV_HEADER.split(','))?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn write(&mut self, record: &SimRecord) -> Result<()> {
        self.inner.serialize(record)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Reads and validates a results file.
pub fn read_records(path: &Path) -> Result<Vec<SimRecord>> {
    if !check_header(path)? {
        return Err(Error::Format(format!("{}: empty results file", path.display())));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let record: SimRecord = row?;
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}
