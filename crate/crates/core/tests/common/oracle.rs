//! Reference implementations that share no code with the crate under test.

const K: [u32; 64] = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
];

/// Straight-line SHA-256, lowercase hex.
pub fn sha256_hex(data: &[u8]) -> String {
    let mut h: [u32; 8] = [
        0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab,
        0x5be0cd19,
    ];
    let mut msg = data.to_vec();
    let bit_len = (data.len() as u64).wrapping_mul(8);
    msg.push(0x80);
    while msg.len() % 64 != 56 {
        msg.push(0);
    }
    msg.extend_from_slice(&bit_len.to_be_bytes());

    for block in msg.chunks(64) {
        let mut w = [0u32; 64];
        for i in 0..16 {
            w[i] = u32::from_be_bytes([
                block[4 * i],
                block[4 * i + 1],
                block[4 * i + 2],
                block[4 * i + 3],
            ]);
        }
        for i in 16..64 {
            let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
            let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16]
                .wrapping_add(s0)
                .wrapping_add(w[i - 7])
                .wrapping_add(s1);
        }
        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for i in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh
                .wrapping_add(s1)
                .wrapping_add(ch)
                .wrapping_add(K[i])
                .wrapping_add(w[i]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        for (slot, v) in h.iter_mut().zip([a, b, c, d, e, f, g, hh]) {
            *slot = slot.wrapping_add(v);
        }
    }
    h.iter().map(|w| format!("{w:08x}")).collect()
}

/// Bitwise CRC-32 (IEEE, reflected).
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xffff_ffffu32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xedb8_8320 & mask);
        }
    }
    !crc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZipEntry {
    pub name: String,
    pub data: Vec<u8>,
    pub method: u16,
    pub mod_time: u16,
    pub mod_date: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Minimal reader for STORED archives: walks the central directory, checks
/// each local header against it and verifies CRCs. Panics on anything else.
pub fn unzip(bytes: &[u8]) -> Vec<ZipEntry> {
    let eocd = (0..=bytes.len() - 22)
        .rev()
        .find(|&i| u32_at(bytes, i) == 0x0605_4b50)
        .expect("end of central directory");
    let count = u16_at(bytes, eocd + 10) as usize;
    let cd_size = u32_at(bytes, eocd + 12) as usize;
    let mut cd = u32_at(bytes, eocd + 16) as usize;
    assert_eq!(cd + cd_size, eocd, "central directory bounds");

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        assert_eq!(u32_at(bytes, cd), 0x0201_4b50, "central header signature");
        let method = u16_at(bytes, cd + 10);
        let mod_time = u16_at(bytes, cd + 12);
        let mod_date = u16_at(bytes, cd + 14);
        let crc = u32_at(bytes, cd + 16);
        let csize = u32_at(bytes, cd + 20) as usize;
        let usize_ = u32_at(bytes, cd + 24) as usize;
        let name_len = u16_at(bytes, cd + 28) as usize;
        let extra_len = u16_at(bytes, cd + 30) as usize;
        let comment_len = u16_at(bytes, cd + 32) as usize;
        let local = u32_at(bytes, cd + 42) as usize;
        let name = String::from_utf8(bytes[cd + 46..cd + 46 + name_len].to_vec()).unwrap();
        assert_eq!(method, 0, "{name} is not stored");
        assert_eq!(csize, usize_);

        assert_eq!(u32_at(bytes, local), 0x0403_4b50, "local header signature");
        assert_eq!(u16_at(bytes, local + 8), method);
        assert_eq!(u32_at(bytes, local + 14), crc);
        let lname_len = u16_at(bytes, local + 26) as usize;
        let lextra_len = u16_at(bytes, local + 28) as usize;
        assert_eq!(&bytes[local + 30..local + 30 + lname_len], name.as_bytes());
        let start = local + 30 + lname_len + lextra_len;
        let data = bytes[start..start + csize].to_vec();
        assert_eq!(crc32(&data), crc, "crc of {name}");

        out.push(ZipEntry {
            name,
            data,
            method,
            mod_time,
            mod_date,
        });
        cd += 46 + name_len + extra_len + comment_len;
    }
    out
}
