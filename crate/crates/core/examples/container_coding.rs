//! Codes a prompt both ways, wraps it in a `.tsk` container, and shows that
//! every single-bit corruption is caught.
//!
//! cargo run --example container_coding

use textsketch::core::{compute_bpp, Container, Mode, TokenCoding, TokenSequence};
use textsketch::token_codec::{
    decode_tokens, encode_text_lossless, id_width, TokenPayload, Tokenizer, WordPieceVocab,
};

fn main() -> textsketch::Result<()> {
    let vocab = WordPieceVocab::synthetic(2048);
    // word-final pieces only, so the rendered text re-tokenizes exactly;
    // text mode still falls back when deflate cannot beat the ids by enough
    let ids: Vec<u32> = (0..16).map(|i| (i * 131 % 512 * 4) as u32).collect();
    let tokens = TokenSequence::new(ids, 2048)?;
    println!("prompt {:?}", vocab.render(tokens.ids())?);

    let fixed = TokenPayload::fixed(&tokens)?;
    let text = encode_text_lossless(&tokens, &vocab)?;
    println!(
        "fixed width: {} bits ({} per id); text: {} bits, coding {:?}, fell back {}",
        fixed.bit_count,
        id_width(2048),
        text.bit_count,
        text.coding,
        text.fell_back
    );
    assert_eq!(decode_tokens(text.coding, &text.bytes, 16, &vocab)?, tokens);

    for (w, h) in [(512, 512), (768, 512)] {
        let bytes = Container::new(
            Mode::Pic,
            w,
            h,
            TokenCoding::FixedWidth,
            fixed.bytes.clone(),
            None,
        )?
        .to_bytes()?;
        let bits = bytes.len() as u64 * 8;
        println!(
            "PIC {w}x{h}: {bits} bits, {:.5} bpp",
            compute_bpp(bits, w, h)?
        );
    }

    let c = Container::new(
        Mode::Pics,
        512,
        512,
        fixed.coding,
        fixed.bytes.clone(),
        Some(vec![0x5a; 300]),
    )?;
    let bytes = c.to_bytes()?;
    assert_eq!(Container::from_bytes(&bytes)?, c);
    let caught = (0..bytes.len() * 8)
        .filter(|&bit| {
            let mut b = bytes.clone();
            b[bit / 8] ^= 1 << (bit % 8);
            Container::from_bytes(&b).is_err()
        })
        .count();
    println!(
        "PICS container: {} bytes; {caught}/{} bit flips detected",
        bytes.len(),
        bytes.len() * 8
    );
    match Container::from_bytes(&bytes[..bytes.len() - 1]) {
        Err(e) => println!("truncated: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
