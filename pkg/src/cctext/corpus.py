"""Seeded synthetic scene-text corpus.

Renders random words onto plain or softly textured backgrounds together with
non-text clutter (geometric shapes, strokes), and writes:

    dataset/img_NNNN.png, dataset/gt_img_NNNN.txt   full images + word boxes
    crops/text/*.png, crops/nontext/*.png           classifier training patches
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont
from scipy import ndimage

from .evaluation import Rect, format_ground_truth

log = logging.getLogger(__name__)

WORDS = """
able about above across after again against along among angle animal answer apple area
around arrive bank base basket beach bear beauty bed before begin behind believe best
better between bird black block blue board boat body bone book border bottle bottom box
bread bridge bright bring brown build burn busy cake call camera camp capital car card
care carry case castle catch cause center chair chance change charge chart check cheese
child choose circle city class clean clear clock close cloud coast coffee cold color
come common corner cotton country course cover cream cross crowd dance dark daughter
deal decide deep desert design detail dinner direct doctor dollar door double down draw
dream dress drink drive early earth east easy edge effect eight energy engine enter
equal even event exact example exit express face fact fair fall family farm fast father
field figure final find fine finger fire first fish five floor flower follow food
foot force forest form forward free fresh friend front fruit full game garden gate
gather gentle gift glass gold good grass great green ground group grow guard guess
guide half hand happy harbor hard heart heat heavy help high hill history hold home
honey horse hospital hotel hour house human hundred idea inch island jacket join
journey judge juice jump keep kind king kitchen knife lake land large laugh lead learn
leave letter level light line lion list little local long lucky lunch machine main
major make market master match meet member metal middle milk mind minute mirror money
month moon morning mother motor mountain mouth music name nation nature near night
noise north notice number ocean office open orange order other paint paper park party
pass peace people pepper piano picture piece place plain plant plate point police pool
port power press price print public purple quick quiet radio rain reach ready record
river road rock room round rule safe sail salt sample school science score season seat
second sense seven shape share ship shop short shoulder side sign silver simple single
sister size sleep small smile snow soft solid sound south space speak special speed
spring square stand star station steel stone store storm street strong study sugar
summer supply table taxi teach team tell tent thank think three ticket tiger time
today tower town track trade train travel tree truck true under union value valley
village visit voice wall warm watch water wave weather west wheel white window winter
wood world write yellow young zone
""".split()

IMAGE_SIZE = (400, 300)   # width, height
FONT_SIZES = (12, 48)
MAX_ROTATION = 5.0
TEXT_PAD = 2
TRACKING = 0.12           # extra gap between letters, in em
SENSOR_NOISE = 0.001


@dataclass
class Placed:
    rect: Rect
    kind: str      # "text" or "shape"
    label: str


def _font(size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.load_default(size=size)


def render_word(word: str, size: int, angle: float) -> np.ndarray:
    """Antialiased coverage mask in [0, 1] for ``word``, tightly cropped."""
    font = _font(size)
    gap = max(2, round(TRACKING * size))
    advance = [font.getlength(ch) + gap for ch in word]
    _, y0, _, y1 = font.getbbox(word)
    pad = size
    im = Image.new("L", (int(sum(advance)) + 2 * pad, y1 - y0 + 2 * pad), 0)
    draw = ImageDraw.Draw(im)
    x = float(pad)
    for ch, adv in zip(word, advance):
        draw.text((x, pad - y0), ch, fill=255, font=font)
        x += adv
    if angle:
        im = im.rotate(angle, resample=Image.Resampling.BICUBIC, expand=True)
    mask = np.asarray(im, dtype=np.float64) / 255.0
    rows = np.flatnonzero(mask.max(axis=1) > 0.02)
    cols = np.flatnonzero(mask.max(axis=0) > 0.02)
    return mask[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]


def ink_rect(mask: np.ndarray, x: int, y: int, threshold: float = 0.5) -> Rect:
    rows = np.flatnonzero(mask.max(axis=1) >= threshold)
    cols = np.flatnonzero(mask.max(axis=0) >= threshold)
    return Rect(x + int(cols[0]), y + int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))


def background(rng: np.random.Generator, w: int, h: int) -> tuple[np.ndarray, bool]:
    """Background intensity field and whether it is light."""
    light = rng.random() < 0.7
    base = rng.uniform(0.65, 0.92) if light else rng.uniform(0.08, 0.35)
    yy, xx = np.mgrid[0:h, 0:w] / max(w, h)
    g = base + rng.uniform(-0.08, 0.08) * (xx - 0.5) + rng.uniform(-0.08, 0.08) * (yy - 0.5)
    if rng.random() < 0.5:
        blob = ndimage.gaussian_filter(rng.normal(size=(h, w)), sigma=rng.uniform(12, 25), mode="wrap")
        blob /= np.abs(blob).max() + 1e-12
        g = g + rng.uniform(0.02, 0.06) * blob
    return np.clip(g, 0.0, 1.0), light


def _ink_level(rng, light: bool) -> float:
    return rng.uniform(0.0, 0.3) if light else rng.uniform(0.7, 1.0)


def _free(rect: Rect, placed: list[Placed], margin: int, w: int, h: int) -> bool:
    if rect.x < margin or rect.y < margin or rect.x + rect.w > w - margin or rect.y + rect.h > h - margin:
        return False
    for p in placed:
        q = p.rect
        if (rect.x < q.x + q.w + margin and q.x < rect.x + rect.w + margin
                and rect.y < q.y + q.h + margin and q.y < rect.y + rect.h + margin):
            return False
    return True


def _blend(img: np.ndarray, mask: np.ndarray, x: int, y: int, level: float) -> None:
    mh, mw = mask.shape
    region = img[y:y + mh, x:x + mw]
    region[...] = region * (1.0 - mask) + level * mask


def _shape_mask(rng: np.random.Generator, size: int) -> tuple[np.ndarray, str]:
    """Supersampled non-text clutter: blobs, frames, bars and strokes."""
    ss = 4
    kind = str(rng.choice(["disc", "ring", "rect", "frame", "triangle", "bar", "stroke", "ellipse"]))
    w = int(size * rng.uniform(0.6, 1.4))
    h = int(size * rng.uniform(0.6, 1.4))
    if kind == "bar":
        w, h = (size * 3, max(4, size // 5)) if rng.random() < 0.5 else (max(4, size // 5), size * 3)
    im = Image.new("L", (w * ss, h * ss), 0)
    d = ImageDraw.Draw(im)
    box = [ss, ss, w * ss - ss - 1, h * ss - ss - 1]
    lw = max(ss, int(rng.uniform(1.5, 4.0) * ss))
    if kind == "disc":
        d.ellipse(box, fill=255)
    elif kind == "ellipse":
        d.ellipse(box, outline=255, width=lw)
    elif kind == "ring":
        d.ellipse(box, outline=255, width=lw * 2)
    elif kind == "rect" or kind == "bar":
        d.rectangle(box, fill=255)
    elif kind == "frame":
        d.rectangle(box, outline=255, width=lw)
    elif kind == "triangle":
        d.polygon([(box[0], box[3]), (box[2], box[3]), ((box[0] + box[2]) // 2, box[1])], fill=255)
    else:
        pts = [(rng.uniform(box[0], box[2]), rng.uniform(box[1], box[3])) for _ in range(3)]
        d.line(pts, fill=255, width=lw, joint="curve")
    small = im.resize((w, h), Image.Resampling.BOX)
    return np.asarray(small, dtype=np.float64) / 255.0, kind


def _try_place(rng, placed, mw, mh, margin, w, h, tries=60):
    for _ in range(tries):
        x = int(rng.integers(margin, max(margin + 1, w - mw - margin)))
        y = int(rng.integers(margin, max(margin + 1, h - mh - margin)))
        if _free(Rect(x, y, mw, mh), placed, margin, w, h):
            return x, y
    return None


def generate_image(rng: np.random.Generator, size=IMAGE_SIZE, max_words: int = 3, max_shapes: int = 4):
    """One synthetic scene: ``(gray image, [Placed ...])``."""
    w, h = size
    img, light = background(rng, w, h)
    placed: list[Placed] = []
    for _ in range(int(rng.integers(1, max_words + 1))):
        word = str(rng.choice(WORDS))
        style = rng.random()
        if style < 0.2:
            word = word.upper()
        elif style < 0.45:
            word = word.capitalize()
        fsize = int(rng.integers(FONT_SIZES[0], FONT_SIZES[1] + 1))
        mask = render_word(word, fsize, float(rng.uniform(-MAX_ROTATION, MAX_ROTATION)))
        if mask.shape[0] >= h - 8 or mask.shape[1] >= w - 8:
            continue
        spot = _try_place(rng, placed, mask.shape[1], mask.shape[0], max(8, fsize), w, h)
        if spot is None:
            continue
        x, y = spot
        _blend(img, mask, x, y, _ink_level(rng, light))
        placed.append(Placed(ink_rect(mask, x, y), "text", word))
    for _ in range(int(rng.integers(0, max_shapes + 1))):
        mask, kind = _shape_mask(rng, int(rng.integers(12, 60)))
        if mask.shape[0] >= h - 8 or mask.shape[1] >= w - 8:
            continue
        spot = _try_place(rng, placed, mask.shape[1], mask.shape[0], 24, w, h)
        if spot is None:
            continue
        x, y = spot
        _blend(img, mask, x, y, _ink_level(rng, light))
        placed.append(Placed(ink_rect(mask, x, y, 0.25), "shape", kind))
    img = img + rng.normal(0.0, SENSOR_NOISE, img.shape)
    return np.clip(img, 0.0, 1.0), placed


def _save_gray(arr: np.ndarray, path: Path) -> None:
    Image.fromarray(np.round(np.clip(arr, 0, 1) * 255).astype(np.uint8)).save(path, format="PNG")


def _pad_crop(img: np.ndarray, r: Rect, pad: int) -> np.ndarray:
    h, w = img.shape
    x0, y0 = max(0, r.x - pad), max(0, r.y - pad)
    x1, y1 = min(w, r.x + r.w + pad), min(h, r.y + r.h + pad)
    return img[y0:y1, x0:x1]


def _background_crop(rng, img: np.ndarray, placed: list[Placed]):
    h, w = img.shape
    for _ in range(30):
        cw, ch = int(rng.integers(12, 90)), int(rng.integers(10, 50))
        if cw >= w or ch >= h:
            continue
        x, y = int(rng.integers(0, w - cw)), int(rng.integers(0, h - ch))
        if _free(Rect(x, y, cw, ch), [p for p in placed if p.kind == "text"], 0, w, h):
            return img[y:y + ch, x:x + cw]
    return None


def generate_corpus(out_dir, n_images: int, seed: int = 0, size=IMAGE_SIZE,
                    crops_per_class: int | None = None) -> dict:
    """Write a dataset and training crops under ``out_dir``; returns counts."""
    out = Path(out_dir)
    ds, text_dir, non_dir = out / "dataset", out / "crops" / "text", out / "crops" / "nontext"
    for d in (ds, text_dir, non_dir):
        d.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_text = n_non = 0
    cap = crops_per_class if crops_per_class is not None else float("inf")
    for i in range(n_images):
        img, placed = generate_image(rng, size)
        stem = f"img_{i:04d}"
        _save_gray(img, ds / f"{stem}.png")
        texts = [p for p in placed if p.kind == "text"]
        (ds / f"gt_{stem}.txt").write_text(format_ground_truth([p.rect for p in texts], [p.label for p in texts]))
        for j, p in enumerate(placed):
            if p.kind == "text" and n_text < cap:
                _save_gray(_pad_crop(img, p.rect, TEXT_PAD), text_dir / f"{stem}_{j}.png")
                n_text += 1
            elif p.kind == "shape" and n_non < cap:
                _save_gray(_pad_crop(img, p.rect, TEXT_PAD), non_dir / f"{stem}_{j}.png")
                n_non += 1
        if n_non < cap and rng.random() < 0.5:
            crop = _background_crop(rng, img, placed)
            if crop is not None:
                _save_gray(crop, non_dir / f"{stem}_bg.png")
                n_non += 1
    log.info("corpus: %d images, %d text crops, %d non-text crops", n_images, n_text, n_non)
    return {"images": n_images, "text_crops": n_text, "nontext_crops": n_non}
