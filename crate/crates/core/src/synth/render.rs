//! Scene rasterization. All drawing is darker-wins (min composition)
//! except contaminants, which are placed on protected clear ground and
//! painted last.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use super::{DecoyKind, DecoyPoint, SceneRender, SceneSpec};
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::mtfilter::{Contamination, ContaminantKind, GroundTruthAnnotation};

/// Margin kept between a contaminant's bounding box and any decoy, and
/// the inflation of the artefact-free zone around contaminants. Keeps
/// the closing stage from welding a contaminant to unrelated structure.
const CONTAMINANT_CLEARANCE: i64 = 16;
/// Minimum centroid distance between two contaminants, comfortably above
/// any density threshold the calibration grid explores.
const CONTAMINANT_SEPARATION: f64 = 80.0;
const BORDER_MARGIN: i64 = 24;
const PLACEMENT_TRIES: usize = 120;
/// Position draws for a contaminant before giving up; small scenes with
/// several mutually-separated contaminants need the headroom.
const CONTAMINANT_TRIES: usize = 600;

pub(crate) fn render(spec: &SceneSpec) -> Result<SceneRender> {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let w = spec.width as i64;
    let h = spec.height as i64;

    // Shapes are generated in relative coordinates first, then placed.
    let mut decoy_shapes: Vec<Shape> = Vec::new();
    for _ in 0..spec.decoys.buttons {
        decoy_shapes.push(button(&mut rng));
    }
    for _ in 0..spec.decoys.drawstrings {
        decoy_shapes.push(drawstring(&mut rng, spec.width.min(spec.height)));
    }
    for _ in 0..spec.decoys.seams {
        decoy_shapes.push(seam(&mut rng, spec.width, spec.height));
    }
    for _ in 0..spec.decoys.zip_runs {
        decoy_shapes.push(zip_run(&mut rng));
    }

    // Decoys may cross each other (seams run under drawstrings on a real
    // garment); they only need to stay inside the frame. Their pixels are
    // marked on a coarse occupancy grid that contaminants must avoid.
    let mut occupancy = Occupancy::new(w, h, 16);
    let mut placed_decoys: Vec<(Shape, (i64, i64))> = Vec::new();
    for shape in decoy_shapes {
        match place(&mut rng, &shape, w, h, &[], 0, 8) {
            Some(origin) => {
                for &(r, c, _) in &shape.points {
                    occupancy.mark(r + origin.0, c + origin.1);
                }
                placed_decoys.push((shape, origin));
            }
            None => {
                return Err(Error::Data(format!(
                    "cannot place decoy ({}) in a {w}x{h} scene",
                    shape.tag
                )))
            }
        }
    }

    // Contaminants: clear ground, mutual separation, away from borders.
    let mut contaminant_shapes = Vec::new();
    for entry in &spec.contaminants {
        for _ in 0..entry.count {
            contaminant_shapes.push((contaminant(&mut rng, entry.spec), entry.spec.kind));
        }
    }
    let mut placed_contaminants: Vec<(Shape, (i64, i64), ContaminantKind)> = Vec::new();
    let mut unplaced: Vec<String> = Vec::new();
    for (shape, kind) in contaminant_shapes {
        let mut found = None;
        'tries: for _ in 0..CONTAMINANT_TRIES {
            let Some(origin) = place(&mut rng, &shape, w, h, &[], 0, BORDER_MARGIN) else {
                continue;
            };
            if !occupancy.is_clear(shape.bbox.offset(origin).inflate(CONTAMINANT_CLEARANCE)) {
                continue;
            }
            let centroid = shape.centroid_at(origin);
            for (other, other_origin, _) in &placed_contaminants {
                let oc = other.centroid_at(*other_origin);
                let d = ((centroid.0 - oc.0).powi(2) + (centroid.1 - oc.1).powi(2)).sqrt();
                if d < CONTAMINANT_SEPARATION {
                    continue 'tries;
                }
            }
            found = Some(origin);
            break;
        }
        match found {
            Some(origin) => {
                for &(r, c, _) in &shape.points {
                    occupancy.mark(r + origin.0, c + origin.1);
                }
                placed_contaminants.push((shape, origin, kind));
            }
            None => unplaced.push(kind.to_string()),
        }
    }
    if !unplaced.is_empty() {
        return Err(Error::Data(format!(
            "cannot place contaminants without overlap: {}",
            unplaced.join(", ")
        )));
    }

    // Rasterize: background, artefact clouds, decoys, contaminants.
    let normal = Normal::new(spec.background.mean, spec.background.std.max(1e-9))
        .map_err(|e| Error::InvalidInput(format!("background distribution: {e}")))?;
    let mut pixels = Vec::with_capacity(spec.width * spec.height);
    for _ in 0..spec.width * spec.height {
        let v: f64 = normal.sample(&mut rng);
        pixels.push(v.round().clamp(0.0, 255.0) as u8);
    }
    let mut img = GrayImage::new(spec.width, spec.height, pixels)?;

    let protected: Vec<BBox> = placed_contaminants
        .iter()
        .map(|(s, o, _)| s.bbox.offset(*o).inflate(CONTAMINANT_CLEARANCE - 4))
        .collect();
    let mut decoy_points = Vec::new();
    render_artefacts(&mut rng, &mut img, spec, &protected, &mut decoy_points);
    for (shape, origin) in &placed_decoys {
        shape.paint_min(&mut img, *origin);
        for anchor in &shape.anchors {
            decoy_points.push(DecoyPoint {
                row: (anchor.0 + origin.0) as f64,
                col: (anchor.1 + origin.1) as f64,
                kind: shape.anchor_kind.unwrap_or(DecoyKind::Knot),
            });
        }
    }

    let mut contaminations = Vec::new();
    for (shape, origin, kind) in &placed_contaminants {
        shape.paint_over(&mut img, *origin);
        // The annotation points at the member pixel nearest the pixel
        // mass centroid, so it always lies on the object.
        let centroid = shape.centroid_at(*origin);
        let on_body = shape
            .points
            .iter()
            .map(|&(r, c, _)| (r + origin.0, c + origin.1))
            .min_by(|a, b| {
                let da = (a.0 as f64 - centroid.0).powi(2) + (a.1 as f64 - centroid.1).powi(2);
                let db = (b.0 as f64 - centroid.0).powi(2) + (b.1 as f64 - centroid.1).powi(2);
                da.partial_cmp(&db).unwrap().then(a.cmp(b))
            })
            .expect("contaminant has pixels");
        contaminations.push(Contamination {
            row: on_body.0 as f64,
            col: on_body.1 as f64,
            kind: *kind,
        });
    }

    Ok(SceneRender {
        image: img,
        annotation: GroundTruthAnnotation { image: String::new(), contaminations },
        decoy_points,
    })
}

fn render_artefacts(
    rng: &mut StdRng,
    img: &mut GrayImage,
    spec: &SceneSpec,
    protected: &[BBox],
    decoy_points: &mut Vec<DecoyPoint>,
) {
    let megapixels = (spec.width * spec.height) as f64 / 1e6;
    let clusters = (spec.artefacts.clusters_per_megapixel * megapixels).round() as usize;
    let (lo, hi) = spec.artefacts.specks_per_cluster;
    let offset = Normal::new(0.0, spec.artefacts.cluster_radius.max(0.5)).unwrap();
    let (g_lo, g_hi) = spec.artefacts.gray;
    for _ in 0..clusters {
        let cy = rng.gen_range(0..spec.height as i64);
        let cx = rng.gen_range(0..spec.width as i64);
        let specks = rng.gen_range(lo..=hi.max(lo));
        // Speck grays correlate within a cluster (one quantization band),
        // so the cluster surfaces together across neighbouring thresholds.
        let base = rng.gen_range(g_lo..=g_hi);
        let mut drawn = 0usize;
        for _ in 0..specks {
            let sy = cy + offset.sample(rng).round() as i64;
            let sx = cx + offset.sample(rng).round() as i64;
            let gray = jitter_in(rng, base, 8, (g_lo, g_hi));
            let size = rng.gen_range(1..=2usize);
            if protected.iter().any(|b| b.contains(sy, sx)) {
                continue;
            }
            // Tiny speck: `size` pixels walked from the center.
            let (mut r, mut c) = (sy, sx);
            for _ in 0..size {
                paint_min(img, r, c, jitter(rng, gray, 3));
                r += rng.gen_range(-1..=1);
                c += rng.gen_range(-1..=1);
            }
            drawn += 1;
        }
        // Dense clusters are the classic false-alarm neighbourhoods;
        // record them as classifier decoy anchors.
        if drawn >= 4 && img.in_bounds(cy, cx) {
            decoy_points.push(DecoyPoint {
                row: cy as f64,
                col: cx as f64,
                kind: DecoyKind::ArtefactCluster,
            });
        }
    }
}

// ---------------------------------------------------------------------
// Shape machinery
// ---------------------------------------------------------------------

/// Coarse cell grid of already-drawn object pixels.
struct Occupancy {
    cell: i64,
    cols: i64,
    rows: i64,
    taken: Vec<bool>,
}

impl Occupancy {
    fn new(w: i64, h: i64, cell: i64) -> Self {
        let cols = w.div_euclid(cell) + 1;
        let rows = h.div_euclid(cell) + 1;
        Self { cell, cols, rows, taken: vec![false; (cols * rows) as usize] }
    }

    fn mark(&mut self, r: i64, c: i64) {
        let cr = r.div_euclid(self.cell);
        let cc = c.div_euclid(self.cell);
        if cr >= 0 && cc >= 0 && cr < self.rows && cc < self.cols {
            self.taken[(cr * self.cols + cc) as usize] = true;
        }
    }

    fn is_clear(&self, bbox: BBox) -> bool {
        let r0 = bbox.top.div_euclid(self.cell).max(0);
        let r1 = bbox.bottom.div_euclid(self.cell).min(self.rows - 1);
        let c0 = bbox.left.div_euclid(self.cell).max(0);
        let c1 = bbox.right.div_euclid(self.cell).min(self.cols - 1);
        for r in r0..=r1 {
            for c in c0..=c1 {
                if self.taken[(r * self.cols + c) as usize] {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug)]
struct BBox {
    top: i64,
    left: i64,
    bottom: i64,
    right: i64,
}

impl BBox {
    fn of(points: &[(i64, i64, u8)]) -> Self {
        let top = points.iter().map(|p| p.0).min().unwrap_or(0);
        let left = points.iter().map(|p| p.1).min().unwrap_or(0);
        let bottom = points.iter().map(|p| p.0).max().unwrap_or(0);
        let right = points.iter().map(|p| p.1).max().unwrap_or(0);
        Self { top, left, bottom, right }
    }

    fn offset(self, origin: (i64, i64)) -> Self {
        Self {
            top: self.top + origin.0,
            left: self.left + origin.1,
            bottom: self.bottom + origin.0,
            right: self.right + origin.1,
        }
    }

    fn inflate(self, m: i64) -> Self {
        Self { top: self.top - m, left: self.left - m, bottom: self.bottom + m, right: self.right + m }
    }

    fn intersects(&self, other: &BBox) -> bool {
        self.top <= other.bottom
            && other.top <= self.bottom
            && self.left <= other.right
            && other.left <= self.right
    }

    fn contains(&self, r: i64, c: i64) -> bool {
        r >= self.top && r <= self.bottom && c >= self.left && c <= self.right
    }
}

/// A rasterized object in relative coordinates: (row, col, gray).
struct Shape {
    tag: &'static str,
    points: Vec<(i64, i64, u8)>,
    bbox: BBox,
    /// Relative anchor points recorded as decoy crop targets.
    anchors: Vec<(i64, i64)>,
    anchor_kind: Option<DecoyKind>,
}

impl Shape {
    fn new(tag: &'static str, mut points: Vec<(i64, i64, u8)>) -> Self {
        points.sort_unstable();
        points.dedup_by_key(|p| (p.0, p.1));
        let bbox = BBox::of(&points);
        Self { tag, points, bbox, anchors: Vec::new(), anchor_kind: None }
    }

    fn centroid_at(&self, origin: (i64, i64)) -> (f64, f64) {
        let n = self.points.len() as f64;
        let sr: i64 = self.points.iter().map(|p| p.0).sum();
        let sc: i64 = self.points.iter().map(|p| p.1).sum();
        (sr as f64 / n + origin.0 as f64, sc as f64 / n + origin.1 as f64)
    }

    fn paint_min(&self, img: &mut GrayImage, origin: (i64, i64)) {
        for &(r, c, g) in &self.points {
            paint_min(img, r + origin.0, c + origin.1, g);
        }
    }

    fn paint_over(&self, img: &mut GrayImage, origin: (i64, i64)) {
        for &(r, c, g) in &self.points {
            let (ar, ac) = (r + origin.0, c + origin.1);
            if img.in_bounds(ar, ac) {
                img.set(ar as usize, ac as usize, g);
            }
        }
    }
}

fn paint_min(img: &mut GrayImage, r: i64, c: i64, g: u8) {
    if img.in_bounds(r, c) {
        let cur = img.get(r as usize, c as usize);
        if g < cur {
            img.set(r as usize, c as usize, g);
        }
    }
}

fn jitter(rng: &mut StdRng, base: u8, spread: i16) -> u8 {
    (base as i16 + rng.gen_range(-spread..=spread)).clamp(0, 255) as u8
}

/// Gray with jitter clamped into an inclusive range.
fn jitter_in(rng: &mut StdRng, base: u8, spread: i16, range: (u8, u8)) -> u8 {
    (base as i16 + rng.gen_range(-spread..=spread)).clamp(range.0 as i16, range.1 as i16) as u8
}

/// Find an origin for `shape` so its bbox stays inside the image with
/// `border` margin and off every rect in `avoid` inflated by `margin`.
fn place(
    rng: &mut StdRng,
    shape: &Shape,
    w: i64,
    h: i64,
    avoid: &[BBox],
    margin: i64,
    border: i64,
) -> Option<(i64, i64)> {
    let bh = shape.bbox.bottom - shape.bbox.top;
    let bw = shape.bbox.right - shape.bbox.left;
    let r_lo = border - shape.bbox.top;
    let r_hi = h - border - bh - shape.bbox.top;
    let c_lo = border - shape.bbox.left;
    let c_hi = w - border - bw - shape.bbox.left;
    if r_hi < r_lo || c_hi < c_lo {
        return None;
    }
    for _ in 0..PLACEMENT_TRIES {
        let origin = (rng.gen_range(r_lo..=r_hi), rng.gen_range(c_lo..=c_hi));
        let placed = shape.bbox.offset(origin).inflate(margin);
        if !avoid.iter().any(|b| b.intersects(&placed)) {
            return Some(origin);
        }
    }
    None
}

// ---------------------------------------------------------------------
// Decoy renderers
// ---------------------------------------------------------------------

fn disk_points(cy: f64, cx: f64, radius: f64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for r in (cy - radius).floor() as i64..=(cy + radius).ceil() as i64 {
        for c in (cx - radius).floor() as i64..=(cx + radius).ceil() as i64 {
            if ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt() <= radius {
                out.push((r, c));
            }
        }
    }
    out
}

/// Dark disk with a lighter center, like a button with its holes.
fn button(rng: &mut StdRng) -> Shape {
    let radius = rng.gen_range(5.0..9.0);
    let base = rng.gen_range(25..=60u8);
    let mut points = Vec::new();
    for (r, c) in disk_points(0.0, 0.0, radius) {
        let d = ((r * r + c * c) as f64).sqrt();
        let gray = if d < radius * 0.35 {
            jitter(rng, base.saturating_add(45), 4)
        } else {
            jitter(rng, base, 4)
        };
        points.push((r, c, gray));
    }
    let mut shape = Shape::new("button", points);
    shape.anchors = vec![(0, 0)];
    shape.anchor_kind = Some(DecoyKind::Button);
    shape
}

/// Mid-gray meandering cord with darker fold knots; the knots are the
/// classic false-contamination anchors.
fn drawstring(rng: &mut StdRng, scene_min_dim: usize) -> Shape {
    let extent = (scene_min_dim as f64 * 0.55).clamp(60.0, 260.0);
    let base = rng.gen_range(132..=148u8);
    let curve_range = (128u8, 154u8);
    let segments = rng.gen_range(4..=7);
    let mut heading = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut pos = (extent / 2.0, extent / 2.0);
    let mut vertices = vec![pos];
    for _ in 0..segments {
        let len = rng.gen_range(18.0..42.0f64);
        heading += rng.gen_range(-0.8..0.8);
        let mut next = (pos.0 + heading.sin() * len, pos.1 + heading.cos() * len);
        // Bounce back toward the box when wandering out.
        let mut guard = 0;
        while !(0.0..extent).contains(&next.0) || !(0.0..extent).contains(&next.1) {
            heading += std::f64::consts::FRAC_PI_2;
            next = (pos.0 + heading.sin() * len, pos.1 + heading.cos() * len);
            guard += 1;
            if guard > 4 {
                next = (pos.0, pos.1);
                break;
            }
        }
        pos = next;
        vertices.push(pos);
    }

    let mut points = Vec::new();
    for pair in vertices.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt().max(1.0);
        let steps = (len * 2.0).ceil() as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let y = a.0 + (b.0 - a.0) * t;
            let x = a.1 + (b.1 - a.1) * t;
            for (r, c) in disk_points(y, x, 1.3) {
                points.push((r, c, jitter_in(rng, base, 4, curve_range)));
            }
        }
    }

    // Fold knots at interior vertices: compact, darker (two fabric
    // layers absorb more).
    let knot_range = (103u8, 131u8);
    let mut anchors = Vec::new();
    {
        let vi = 1 + rng.gen_range(0..vertices.len() - 2);
        let v = vertices[vi.min(vertices.len() - 2)];
        let knot_base = rng.gen_range(108..=126u8);
        let a = rng.gen_range(1.6..2.6);
        let b = rng.gen_range(1.3..2.2);
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        for (r, c) in ellipse_points(v.0, v.1, a, b, theta) {
            points.push((r, c, jitter_in(rng, knot_base, 3, knot_range)));
        }
        anchors.push((v.0.round() as i64, v.1.round() as i64));
    }

    // Darker pixels win inside the shape itself (knot over curve).
    points.sort_unstable_by_key(|x| (x.0, x.1, x.2));
    points.dedup_by_key(|p| (p.0, p.1));

    let mut shape = Shape::new("drawstring", points);
    shape.anchors = anchors;
    shape.anchor_kind = Some(DecoyKind::Knot);
    shape
}

/// Long thin slightly bowed stitch line.
fn seam(rng: &mut StdRng, width: usize, height: usize) -> Shape {
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    // Cap the projections so the line always fits inside the scene.
    let fit_h = (height as f64 - 40.0) / angle.sin().abs().max(1e-3);
    let fit_w = (width as f64 - 40.0) / angle.cos().abs().max(1e-3);
    let max_len = fit_h.min(fit_w).min(width.max(height) as f64 * 0.4).max(61.0);
    let len = rng.gen_range(60.0..max_len);
    let sag = rng.gen_range(-8.0..8.0f64);
    let base = rng.gen_range(142..=168u8);
    let (dy, dx) = (angle.sin(), angle.cos());
    let (ny, nx) = (-dx, dy);
    let steps = (len * 2.0) as usize;
    let mut points = Vec::new();
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let along = (t - 0.5) * len;
        let bow = sag * (1.0 - (2.0 * t - 1.0).powi(2));
        let y = along * dy + bow * ny;
        let x = along * dx + bow * nx;
        points.push((y.round() as i64, x.round() as i64, jitter(rng, base, 5)));
        if rng.gen_bool(0.5) {
            points.push((y.round() as i64 + 1, x.round() as i64, jitter(rng, base, 5)));
        }
    }
    Shape::new("seam", points)
}

/// Periodic small teeth in a tight row; the row fuses under closing
/// (rejected by shape) and partial rows die in the density filter.
fn zip_run(rng: &mut StdRng) -> Shape {
    let len = rng.gen_range(60.0..150.0f64);
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    let spacing = rng.gen_range(3.0..4.5f64);
    let tooth_gray = rng.gen_range(95..=128u8);
    let (dy, dx) = (angle.sin(), angle.cos());
    let mut points = Vec::new();
    let mut anchors = Vec::new();
    let n_teeth = (len / spacing) as usize;
    for i in 0..n_teeth {
        let t = (i as f64 * spacing) - len / 2.0;
        let cy = t * dy;
        let cx = t * dx;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                points.push((
                    cy.round() as i64 + dr,
                    cx.round() as i64 + dc,
                    jitter(rng, tooth_gray, 6),
                ));
            }
        }
        if i % 3 == 0 {
            anchors.push((cy.round() as i64, cx.round() as i64));
        }
    }
    let mut shape = Shape::new("zip", points);
    shape.anchors = anchors;
    shape.anchor_kind = Some(DecoyKind::ZipTooth);
    shape
}

// ---------------------------------------------------------------------
// Contaminant renderers
// ---------------------------------------------------------------------

fn ellipse_points(cy: f64, cx: f64, a: f64, b: f64, theta: f64) -> Vec<(i64, i64)> {
    let r = a.max(b).ceil() as i64 + 1;
    let (sin, cos) = theta.sin_cos();
    let mut out = Vec::new();
    let (icy, icx) = (cy.round() as i64, cx.round() as i64);
    for dr in -r..=r {
        for dc in -r..=r {
            let y = (icy + dr) as f64 - cy;
            let x = (icx + dc) as f64 - cx;
            let u = cos * x + sin * y;
            let v = -sin * x + cos * y;
            if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                out.push((icy + dr, icx + dc));
            }
        }
    }
    out
}

fn capsule_points(p0: (f64, f64), p1: (f64, f64), half_width: f64) -> Vec<(i64, i64)> {
    let len = ((p1.0 - p0.0).powi(2) + (p1.1 - p0.1).powi(2)).sqrt().max(1.0);
    let steps = (len * 2.0).ceil() as usize;
    let mut out = Vec::new();
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let y = p0.0 + (p1.0 - p0.0) * t;
        let x = p0.1 + (p1.1 - p0.1) * t;
        if half_width <= 0.5 {
            out.push((y.round() as i64, x.round() as i64));
        } else {
            out.extend(disk_points(y, x, half_width));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn contaminant(rng: &mut StdRng, spec: super::ContaminantSpec) -> Shape {
    let target_area = rng.gen_range(spec.area.0..=spec.area.1) as f64;
    let gray_base = rng.gen_range(spec.gray.0..=spec.gray.1);
    // Jitter spread of 3 stays inside the configured range via clamping.
    let raw = match spec.kind {
        ContaminantKind::Pebble | ContaminantKind::Other => {
            let elong = rng.gen_range(spec.elongation.0..=spec.elongation.1);
            let a = (target_area * elong / std::f64::consts::PI).sqrt().max(0.8);
            let b = (target_area / (std::f64::consts::PI * elong)).sqrt().max(0.8);
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            // Rough edges: without them every rasterized pebble is
            // exactly convex, the calibrated solidity interval collapses
            // to a point and rejects any real-world concavity.
            let wobble = rng.gen_range(0.03..0.12);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let (sin, cos) = theta.sin_cos();
            let r_max = a.ceil() as i64 + 2;
            let mut pts = Vec::new();
            for dr in -r_max..=r_max {
                for dc in -r_max..=r_max {
                    let y = dr as f64;
                    let x = dc as f64;
                    let u = cos * x + sin * y;
                    let v = -sin * x + cos * y;
                    let ang = v.atan2(u);
                    let bump = 1.0 + wobble * (3.0 * ang + phase).sin();
                    if (u / (a * bump)).powi(2) + (v / (b * bump)).powi(2) <= 1.0 {
                        pts.push((dr, dc));
                    }
                }
            }
            pts
        }
        ContaminantKind::Needle => {
            let elong = rng.gen_range(spec.elongation.0..=spec.elongation.1);
            // Solve the capsule width so the rendered moment aspect tracks
            // the sampled elongation (a fixed-point step on the discrete
            // capsule's approximate axis lengths).
            let mut width = (target_area / elong).sqrt();
            let aspect = (target_area / width + 0.55) / (width + 0.55);
            width = (width * (aspect / elong).sqrt()).clamp(1.0, 2.5);
            let len = (target_area / width).max(3.0);
            let angle = rng.gen_range(0.0..std::f64::consts::PI);
            let (dy, dx) = (angle.sin(), angle.cos());
            // Half-pixel offset: an axis-aligned centerline on integer
            // rows would rasterize one pixel wide regardless of the
            // solved width, collapsing the moment aspect to the length.
            capsule_points(
                (0.5 - dy * len / 2.0, 0.5 - dx * len / 2.0),
                (0.5 + dy * len / 2.0, 0.5 + dx * len / 2.0),
                (width / 2.0).max(0.5),
            )
        }
        ContaminantKind::Clip => {
            // Bent wire: two arms joined at a vertex.
            let arm = (target_area / 2.1).clamp(5.0, 16.0);
            let a0 = rng.gen_range(0.0..std::f64::consts::TAU);
            let bend = rng.gen_range(0.6..1.6);
            let p0 = (a0.sin() * arm, a0.cos() * arm);
            let p1 = ((a0 + bend).sin() * arm, (a0 + bend).cos() * arm);
            let mut pts = capsule_points(p0, (0.0, 0.0), 0.6);
            pts.extend(capsule_points((0.0, 0.0), p1, 0.6));
            pts.sort_unstable();
            pts.dedup();
            pts
        }
        ContaminantKind::Plastic => {
            // Blobby fragment: ellipse with perturbed radius.
            let a = (target_area / std::f64::consts::PI).sqrt();
            let wobble = rng.gen_range(0.2..0.5);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = a.ceil() as i64 + 2;
            let mut pts = Vec::new();
            for dr in -r..=r {
                for dc in -r..=r {
                    let d = ((dr * dr + dc * dc) as f64).sqrt();
                    let ang = (dr as f64).atan2(dc as f64);
                    let limit = a * (1.0 + wobble * (3.0 * ang + phase).sin());
                    if d <= limit.max(0.9) {
                        pts.push((dr, dc));
                    }
                }
            }
            pts
        }
    };

    let points: Vec<(i64, i64, u8)> = raw
        .into_iter()
        .map(|(r, c)| (r, c, jitter_in(rng, gray_base, 3, spec.gray)))
        .collect();
    Shape::new("contaminant", points)
}
