use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::PureState;
use crate::scalar::{creal, czero, Real};

pub const IMAGE_PIXELS: usize = 784;

/// Canonical file names: train images, train labels, test images, test labels.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Idx {
    Images { count: usize, rows: usize, cols: usize, pixels: Vec<u8> },
    Labels(Vec<u8>),
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse {
            offset,
            message: format!("header truncated ({} bytes)", bytes.len()),
        })
}

/// Big-endian IDX: magic 2051 is `count × rows × cols` images, 2049 is a label vector.
pub fn parse_idx(bytes: &[u8]) -> Result<Idx> {
    let magic = be_u32(bytes, 0)?;
    let count = be_u32(bytes, 4)? as usize;
    let (header, item) = match magic {
        IMAGE_MAGIC => (16, be_u32(bytes, 8)? as usize * be_u32(bytes, 12)? as usize),
        LABEL_MAGIC => (8, 1),
        other => {
            return Err(Error::Parse {
                offset: 0,
                message: format!("unknown magic {other:#010x}"),
            })
        }
    };
    let expected = header + count * item;
    if bytes.len() != expected {
        return Err(Error::Parse {
            offset: bytes.len().min(expected),
            message: format!("header declares {expected} bytes, file has {}", bytes.len()),
        });
    }
    let body = bytes[header..].to_vec();
    Ok(match magic {
        IMAGE_MAGIC => Idx::Images {
            count,
            rows: be_u32(bytes, 8)? as usize,
            cols: be_u32(bytes, 12)? as usize,
            pixels: body,
        },
        _ => Idx::Labels(body),
    })
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<Idx> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes)
}

/// Flattened 28×28 images with their digit labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MnistSplit {
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl MnistSplit {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn from_idx(images: Idx, labels: Idx) -> Result<Self> {
        match (images, labels) {
            (Idx::Images { count, rows, cols, pixels }, Idx::Labels(labels)) => {
                if count != labels.len() {
                    return Err(Error::config(format!(
                        "{count} images but {} labels",
                        labels.len()
                    )));
                }
                let size = rows * cols;
                Ok(Self {
                    images: pixels.chunks(size.max(1)).map(<[u8]>::to_vec).collect(),
                    labels,
                })
            }
            _ => Err(Error::config("expected an image file and a label file")),
        }
    }

    pub fn histogram(&self) -> [usize; 10] {
        let mut h = [0; 10];
        for &l in &self.labels {
            h[(l as usize).min(9)] += 1;
        }
        h
    }
}

/// `$VSQL_DATA_DIR`, else `$HOME/.cache/vsql/mnist`.
pub fn mnist_dir() -> PathBuf {
    if let Some(d) = std::env::var_os("VSQL_DATA_DIR") {
        return PathBuf::from(d);
    }
    let home = std::env::var_os("HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    home.join(".cache").join("vsql").join("mnist")
}

/// Reads the four canonical files from `dir`; returns (train, test).
pub fn load_mnist(dir: impl AsRef<Path>) -> Result<(MnistSplit, MnistSplit)> {
    let dir = dir.as_ref();
    let [tri, trl, tei, tel] = MNIST_FILES.map(|f| dir.join(f));
    let train = MnistSplit::from_idx(read_idx(tri)?, read_idx(trl)?)?;
    let test = MnistSplit::from_idx(read_idx(tei)?, read_idx(tel)?)?;
    Ok((train, test))
}

/// Keeps digits 0 and 1.
pub fn filter_binary_01(split: &MnistSplit) -> MnistSplit {
    let mut out = MnistSplit::default();
    for (img, &l) in split.images.iter().zip(&split.labels) {
        if l <= 1 {
            out.images.push(img.clone());
            out.labels.push(l);
        }
    }
    out
}

/// `per_class` seeded draws from every label present, returned in shuffled order.
pub fn stratified_subset(split: &MnistSplit, per_class: usize, seed: u64) -> MnistSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::new();
    for digit in 0..=9u8 {
        let mut idx: Vec<usize> = (0..split.len()).filter(|&i| split.labels[i] == digit).collect();
        idx.shuffle(&mut rng);
        picked.extend(idx.into_iter().take(per_class));
    }
    picked.shuffle(&mut rng);
    MnistSplit {
        images: picked.iter().map(|&i| split.images[i].clone()).collect(),
        labels: picked.iter().map(|&i| split.labels[i]).collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MnistTask {
    /// Digits 0 and 1 only.
    #[default]
    Binary01,
    TenClass,
}

/// Which MNIST samples an experiment uses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistSpec {
    pub task: MnistTask,
    /// Stratified draw per digit from the training split; all samples when unset.
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    pub seed: u64,
    /// Overrides [`mnist_dir`].
    pub dir: Option<PathBuf>,
}

impl MnistSpec {
    pub fn num_classes(&self) -> usize {
        match self.task {
            MnistTask::Binary01 => 2,
            MnistTask::TenClass => 10,
        }
    }

    /// Loads, filters and subsamples; returns (train, test).
    pub fn load(&self) -> Result<(MnistSplit, MnistSplit)> {
        let dir = self.dir.clone().unwrap_or_else(mnist_dir);
        let (mut train, mut test) = load_mnist(dir)?;
        if self.task == MnistTask::Binary01 {
            train = filter_binary_01(&train);
            test = filter_binary_01(&test);
        }
        if let Some(k) = self.train_per_class {
            train = stratified_subset(&train, k, self.seed);
        }
        if let Some(k) = self.test_per_class {
            test = stratified_subset(&test, k, self.seed ^ 1);
        }
        Ok((train, test))
    }
}

/// Pixels ÷ 255, row-major, zero-padded to 1024 and L2-normalised: a 10-qubit state.
pub fn encode_amplitude<T: Real>(image: &[u8]) -> Result<PureState<T>> {
    if image.len() != IMAGE_PIXELS {
        return Err(Error::Encoding(format!(
            "expected {IMAGE_PIXELS} pixels, got {}",
            image.len()
        )));
    }
    if image.iter().all(|&p| p == 0) {
        return Err(Error::Encoding("all-zero image has no amplitude encoding".into()));
    }
    let scale = T::one() / T::lit(255.0);
    let mut amps = vec![czero(); 1024];
    for (a, &p) in amps.iter_mut().zip(image) {
        *a = creal(T::lit(p as f64) * scale);
    }
    PureState::normalized(amps).map_err(|e| Error::Encoding(e.to_string()))
}

/// The 784 amplitudes of [`encode_amplitude`] as real numbers: the classical
/// baseline sees exactly the normalised vector the quantum model receives.
pub fn pixel_vector<T: Real>(image: &[u8]) -> Result<Vec<T>> {
    let state = encode_amplitude::<T>(image)?;
    Ok(state.amplitudes()[..IMAGE_PIXELS].iter().map(|a| a.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        let mut v = magic.to_be_bytes().to_vec();
        for d in dims {
            v.extend(d.to_be_bytes());
        }
        v
    }

    #[test]
    fn parses_images_and_labels() {
        let mut img = header(2051, &[2, 2, 3]);
        img.extend(0..12u8);
        match parse_idx(&img).unwrap() {
            Idx::Images { count, rows, cols, pixels } => {
                assert_eq!((count, rows, cols), (2, 2, 3));
                assert_eq!(pixels.len(), 12);
            }
            other => panic!("{other:?}"),
        }
        let mut lab = header(2049, &[3]);
        lab.extend([7, 1, 9]);
        assert_eq!(parse_idx(&lab).unwrap(), Idx::Labels(vec![7, 1, 9]));
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let bad = header(0x1234_5678, &[0]);
        assert!(matches!(parse_idx(&bad), Err(Error::Parse { offset: 0, .. })));
        let mut short = header(2049, &[5]);
        short.extend([1, 2]);
        assert!(matches!(parse_idx(&short), Err(Error::Parse { offset: 10, .. })));
        assert!(matches!(parse_idx(&[0, 0, 8]), Err(Error::Parse { .. })));
    }

    #[test]
    fn uniform_image_encoding() {
        let s = encode_amplitude::<f64>(&[37u8; IMAGE_PIXELS]).unwrap();
        assert_eq!(s.n_qubits(), 10);
        let a = s.amplitudes();
        for x in &a[..784] {
            assert!((x.re - 1.0 / 28.0).abs() < 1e-15);
        }
        assert!(a[784..].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn blank_image_is_rejected() {
        assert!(matches!(encode_amplitude::<f64>(&[0u8; IMAGE_PIXELS]), Err(Error::Encoding(_))));
        assert!(matches!(encode_amplitude::<f64>(&[1u8; 10]), Err(Error::Encoding(_))));
    }

    #[test]
    fn filter_keeps_zeros_and_ones() {
        let split = MnistSplit {
            images: vec![vec![0; 4], vec![1; 4], vec![2; 4], vec![3; 4]],
            labels: vec![0, 1, 2, 1],
        };
        let f = filter_binary_01(&split);
        assert_eq!(f.labels, vec![0, 1, 1]);
        assert!(filter_binary_01(&MnistSplit::default()).is_empty());
    }
}
