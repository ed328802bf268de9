//! Flat little-endian binary containers for models and buffers.
//!
//! Every container opens with a 4-byte magic and a `u32` format version.
//! Networks are stored as a layer table (`in`, `out`, activation code per
//! layer, all `u32`) followed by each layer's weights (row-major) and bias as
//! `f64`, layer by layer.
//!
//! | magic  | body after the version                                              |
//! |--------|---------------------------------------------------------------------|
//! | `GMEM` | latent, slots, conditions, ema decay, trained steps, encoder, decoder, centroids, counts |
//! | `QNET` | network                                                             |
//! | `RBUF` | kind, capacity, state dim, seen, item count, items                  |

use std::fs;
use std::path::Path;

use crate::agent::QNetwork;
use crate::error::{Error, Result};
use crate::generative::{CVae, ConditionCentroids};
use crate::nn::{Activation, DenseLayer, Mlp, Tensor};
use crate::replay::{Experience, FifoBuffer, ReservoirBuffer};

pub const GMEM_MAGIC: [u8; 4] = *b"GMEM";
pub const QNET_MAGIC: [u8; 4] = *b"QNET";
pub const RBUF_MAGIC: [u8; 4] = *b"RBUF";
pub const FORMAT_VERSION: u32 = 1;

const KIND_FIFO: u32 = 0;
const KIND_RESERVOIR: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn new(magic: [u8; 4]) -> Self {
        let mut w = Writer(magic.to_vec());
        w.u32(FORMAT_VERSION);
        w
    }

    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        vs.iter().for_each(|&v| self.f64(v));
    }

    fn len_u32(&mut self, n: usize) -> Result<()> {
        let v = u32::try_from(n).map_err(|_| Error::Domain(format!("{n} does not fit the u32 field")))?;
        self.u32(v);
        Ok(())
    }

    fn mlp(&mut self, net: &Mlp) -> Result<()> {
        self.len_u32(net.layers().len())?;
        for l in net.layers() {
            self.len_u32(l.inputs())?;
            self.len_u32(l.outputs())?;
            self.u32(l.activation.code() as u32);
        }
        for l in net.layers() {
            self.f64s(l.weights.value.data());
            self.f64s(l.bias.value.data());
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8], magic: [u8; 4]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let found = r.take(4)?;
        if found != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(found),
                String::from_utf8_lossy(&magic)
            )));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(Error::Length { needed: n, available });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// Checks the byte budget up front so a corrupt count cannot trigger a
    /// huge allocation.
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let needed = n.checked_mul(8).ok_or(Error::Length {
            needed: usize::MAX,
            available: self.bytes.len() - self.pos,
        })?;
        let raw = self.take(needed)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::Format(format!("flag byte {v} is neither 0 nor 1"))),
        }
    }

    fn mlp(&mut self) -> Result<Mlp> {
        let count = self.usize()?;
        if count == 0 {
            return Err(Error::Format("network with no layers".into()));
        }
        let mut shapes = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let inputs = self.usize()?;
            let outputs = self.usize()?;
            let code = self.u32()?;
            let act = u8::try_from(code)
                .ok()
                .and_then(Activation::from_code)
                .ok_or_else(|| Error::Format(format!("unknown activation code {code}")))?;
            if inputs == 0 || outputs == 0 {
                return Err(Error::Format("zero-width layer".into()));
            }
            shapes.push((inputs, outputs, act));
        }
        let mut layers = Vec::with_capacity(count);
        for (inputs, outputs, act) in shapes {
            let w = self.f64s(inputs * outputs)?;
            let b = self.f64s(outputs)?;
            layers.push(DenseLayer::from_parts(
                Tensor::matrix(outputs, inputs, w)?,
                Tensor::new(vec![outputs], b)?,
                act,
            ));
        }
        Mlp::from_layers(layers).map_err(|e| Error::Consistency(e.to_string()))
    }

    fn finish(self) -> Result<()> {
        let left = self.bytes.len() - self.pos;
        if left != 0 {
            return Err(Error::Consistency(format!("{left} trailing bytes after container body")));
        }
        Ok(())
    }
}

pub fn encode_cvae(vae: &CVae) -> Result<Vec<u8>> {
    let mut w = Writer::new(GMEM_MAGIC);
    w.len_u32(vae.latent_dim())?;
    w.len_u32(vae.max_conditions())?;
    w.len_u32(vae.condition_count())?;
    let c = vae.centroids();
    w.f64(c.ema_decay());
    w.u64(vae.trained_steps());
    w.mlp(vae.encoder())?;
    w.mlp(vae.decoder())?;
    for centroid in c.centroids() {
        w.f64s(centroid);
    }
    for &n in c.counts() {
        w.u64(n);
    }
    Ok(w.0)
}

pub fn decode_cvae(bytes: &[u8]) -> Result<CVae> {
    let mut r = Reader::open(bytes, GMEM_MAGIC)?;
    let latent = r.usize()?;
    let slots = r.usize()?;
    let conditions = r.usize()?;
    let ema = r.f64()?;
    if !(0.0..=1.0).contains(&ema) {
        return Err(Error::Format(format!("ema decay {ema} outside [0, 1]")));
    }
    let trained_steps = r.u64()?;
    let encoder = r.mlp()?;
    let decoder = r.mlp()?;
    if conditions > slots {
        return Err(Error::Consistency(format!("{conditions} conditions exceed {slots} slots")));
    }
    let centroids = (0..conditions).map(|_| r.f64s(latent)).collect::<Result<Vec<_>>>()?;
    let counts = (0..conditions).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let centroids = ConditionCentroids::from_parts(centroids, counts, ema);
    CVae::from_parts(encoder, decoder, latent, slots, centroids, trained_steps).map_err(|e| match e {
        Error::Dimension { .. } => Error::Consistency(e.to_string()),
        other => other,
    })
}

pub fn encode_qnet(q: &QNetwork) -> Result<Vec<u8>> {
    let mut w = Writer::new(QNET_MAGIC);
    w.mlp(q.net())?;
    Ok(w.0)
}

pub fn decode_qnet(bytes: &[u8]) -> Result<QNetwork> {
    let mut r = Reader::open(bytes, QNET_MAGIC)?;
    let net = r.mlp()?;
    r.finish()?;
    QNetwork::from_mlp(net)
}

fn write_items(w: &mut Writer, items: &[&Experience]) -> Result<()> {
    w.u64(items.len() as u64);
    for e in items {
        w.f64s(&e.state);
        w.len_u32(e.action)?;
        w.f64(e.reward);
        w.f64s(&e.next_state);
        w.u8(e.done as u8);
        w.i64(e.eval_task_id());
        match &e.teacher_q {
            Some(q) => {
                w.u8(1);
                w.len_u32(q.len())?;
                w.f64s(q);
            }
            None => w.u8(0),
        }
    }
    Ok(())
}

fn read_items(r: &mut Reader, dim: usize, capacity: usize) -> Result<Vec<Experience>> {
    let count = r.u64()? as usize;
    if count > capacity {
        return Err(Error::Consistency(format!("{count} items exceed capacity {capacity}")));
    }
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let state = r.f64s(dim)?;
        let action = r.usize()?;
        let reward = r.f64()?;
        let next_state = r.f64s(dim)?;
        let done = r.flag()?;
        let task = r.i64()?;
        let teacher_q = if r.flag()? {
            let n = r.usize()?;
            Some(r.f64s(n)?)
        } else {
            None
        };
        let mut e = Experience::new(state, action, reward, next_state, done, 0).with_task_id(task);
        e.teacher_q = teacher_q;
        items.push(e);
    }
    Ok(items)
}

fn buffer_header(w: &mut Writer, kind: u32, capacity: usize, dim: usize, seen: u64) -> Result<()> {
    w.u32(kind);
    w.u64(capacity as u64);
    w.len_u32(dim)?;
    w.u64(seen);
    Ok(())
}

pub fn encode_fifo(buf: &FifoBuffer) -> Result<Vec<u8>> {
    let mut w = Writer::new(RBUF_MAGIC);
    let len = buf.iter().count();
    buffer_header(&mut w, KIND_FIFO, buf.capacity(), buf.state_dim(), len as u64)?;
    write_items(&mut w, &buf.iter().collect::<Vec<_>>())?;
    Ok(w.0)
}

pub fn encode_reservoir(buf: &ReservoirBuffer) -> Result<Vec<u8>> {
    let mut w = Writer::new(RBUF_MAGIC);
    buffer_header(&mut w, KIND_RESERVOIR, buf.capacity(), buf.state_dim(), buf.seen())?;
    write_items(&mut w, &buf.iter().collect::<Vec<_>>())?;
    Ok(w.0)
}

/// A buffer read back from an `RBUF` container.
#[derive(Debug, Clone)]
pub enum StoredBuffer {
    Fifo(FifoBuffer),
    Reservoir(ReservoirBuffer),
}

pub fn decode_buffer(bytes: &[u8]) -> Result<StoredBuffer> {
    let mut r = Reader::open(bytes, RBUF_MAGIC)?;
    let kind = r.u32()?;
    let capacity = r.u64()? as usize;
    let dim = r.usize()?;
    let seen = r.u64()?;
    if capacity == 0 {
        return Err(Error::Format("buffer capacity is zero".into()));
    }
    let items = read_items(&mut r, dim, capacity)?;
    r.finish()?;
    if seen < items.len() as u64 {
        return Err(Error::Consistency(format!("{} items but only {seen} seen", items.len())));
    }
    match kind {
        KIND_FIFO => {
            let mut buf = FifoBuffer::new(capacity, dim)?;
            for e in items {
                buf.push(e)?;
            }
            Ok(StoredBuffer::Fifo(buf))
        }
        KIND_RESERVOIR => Ok(StoredBuffer::Reservoir(ReservoirBuffer::from_parts(capacity, dim, items, seen))),
        k => Err(Error::Format(format!("unknown buffer kind {k}"))),
    }
}

pub fn save(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Vec<u8>> {
    Ok(fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generative::CVaeConfig;
    use crate::rng::SeededRng;

    fn vae_with_conditions() -> CVae {
        let mut cfg = CVaeConfig::new(5, 3);
        cfg.hidden = vec![4];
        cfg.max_conditions = 4;
        let mut vae = CVae::new(&cfg, &mut SeededRng::new(3)).unwrap();
        vae.spawn_condition(vec![0.5, -1.0, 2.0]).unwrap();
        vae.spawn_condition(vec![1.0, 0.0, 0.25]).unwrap();
        vae
    }

    #[test]
    fn cvae_round_trip_is_byte_identical() {
        let bytes = encode_cvae(&vae_with_conditions()).unwrap();
        let back = decode_cvae(&bytes).unwrap();
        assert_eq!(encode_cvae(&back).unwrap(), bytes);
        assert_eq!(back.condition_count(), 2);
        assert_eq!(back.centroids().centroid(0), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn header_layout() {
        let bytes = encode_cvae(&vae_with_conditions()).unwrap();
        assert_eq!(&bytes[..4], b"GMEM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), FORMAT_VERSION);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
    }

    #[test]
    fn every_truncation_is_a_length_error() {
        let bytes = encode_cvae(&vae_with_conditions()).unwrap();
        for cut in 4..bytes.len() {
            match decode_cvae(&bytes[..cut]) {
                Err(Error::Length { .. }) => {}
                other => panic!("cut at {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn wrong_magic_and_trailing_bytes() {
        let mut bytes = encode_qnet(&QNetwork::new(3, &[4], 2, &mut SeededRng::new(0)).unwrap()).unwrap();
        assert!(matches!(decode_cvae(&bytes), Err(Error::Format(_))));
        bytes.push(0);
        assert!(matches!(decode_qnet(&bytes), Err(Error::Consistency(_))));
    }

    #[test]
    fn buffers_keep_task_tags_and_teacher_targets() {
        let mut fifo = FifoBuffer::new(3, 2).unwrap();
        for i in 0..4 {
            fifo.push(Experience::new(vec![i as f64, 0.0], i % 2, -1.0, vec![0.0, 1.0], i == 3, i))
                .unwrap();
        }
        let bytes = encode_fifo(&fifo).unwrap();
        let StoredBuffer::Fifo(back) = decode_buffer(&bytes).unwrap() else {
            panic!("expected a FIFO buffer");
        };
        assert_eq!(encode_fifo(&back).unwrap(), bytes);
        let tags: Vec<i64> = back.iter().map(|e| e.eval_task_id()).collect();
        assert_eq!(tags, vec![1, 2, 3]);

        let mut res = ReservoirBuffer::new(2, 2).unwrap();
        let mut rng = SeededRng::new(9);
        for i in 0..5 {
            res.offer(Experience::distilled(vec![i as f64, 1.0], vec![0.1, 0.2], 1), &mut rng)
                .unwrap();
        }
        let bytes = encode_reservoir(&res).unwrap();
        let StoredBuffer::Reservoir(back) = decode_buffer(&bytes).unwrap() else {
            panic!("expected a reservoir");
        };
        assert_eq!(back.seen(), 5);
        assert_eq!(encode_reservoir(&back).unwrap(), bytes);
    }
}
