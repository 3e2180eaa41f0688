use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use pbkdf2::pbkdf2_hmac;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

pub const KDF_ITERATIONS: u32 = 100_000;
pub const NONCE_LEN: usize = 12;
const SALT_PREFIX: &str = "chunkchain/classroom/";

/// Symmetric key shared by every node of one classroom.
#[derive(Clone)]
pub struct ClassroomKey([u8; 32]);

impl std::fmt::Debug for ClassroomKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ClassroomKey(..)")
    }
}

impl ClassroomKey {
    /// PBKDF2-HMAC-SHA256 over the passphrase, salted with the classroom name.
    pub fn derive(classroom_name: &str, passphrase: &str) -> Self {
        let salt = format!("{SALT_PREFIX}{classroom_name}");
        let mut key = [0u8; 32];
        pbkdf2_hmac::<Sha256>(passphrase.as_bytes(), salt.as_bytes(), KDF_ITERATIONS, &mut key);
        Self(key)
    }

    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    /// Encrypts to `nonce || ciphertext+tag`.
    pub fn seal<R: RngCore + CryptoRng>(&self, plaintext: &[u8], rng: &mut R) -> Vec<u8> {
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        let cipher = ChaCha20Poly1305::new(Key::from_slice(&self.0));
        let ct = cipher
            .encrypt(Nonce::from_slice(&nonce), plaintext)
            .expect("in-memory encryption cannot fail");
        let mut out = Vec::with_capacity(NONCE_LEN + ct.len());
        out.extend_from_slice(&nonce);
        out.extend_from_slice(&ct);
        out
    }

    /// `None` if the payload is truncated or fails authentication.
    pub fn open(&self, payload: &[u8]) -> Option<Vec<u8>> {
        if payload.len() < NONCE_LEN {
            return None;
        }
        let (nonce, ct) = payload.split_at(NONCE_LEN);
        ChaCha20Poly1305::new(Key::from_slice(&self.0))
            .decrypt(Nonce::from_slice(nonce), ct)
            .ok()
    }
}
