//! Instrumentation hook threaded through the format parsers.
//!
//! Validators pass `()` and pay nothing; toy targets pass an
//! [`crate::coverage::EdgeTrace`].

pub trait Probe {
    fn hit(&mut self, edge: u16);

    fn hit_n(&mut self, edge: u16, n: u32) {
        for _ in 0..n {
            self.hit(edge);
        }
    }
}

impl Probe for () {
    #[inline]
    fn hit(&mut self, _edge: u16) {}

    #[inline]
    fn hit_n(&mut self, _edge: u16, _n: u32) {}
}
