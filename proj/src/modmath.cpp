#include "trace/modmath.hpp"

namespace trace {

unsigned bit_length(const BigInt& v) {
    if (v == 0) return 0;
    return static_cast<unsigned>(mpz_sizeinbase(v.get_mpz_t(), 2));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

std::uint64_t SeededRng::next_u64() { return gen_(); }

SeededRng SeededRng::child(std::uint64_t index) const {
    return SeededRng(splitmix64(seed_ ^ (0xA24BAED4963EE407ULL * (index + 1))));
}

BigInt SeededRng::rand_bits(unsigned bits) {
    if (bits < 1) throw Error("rand_bits: bits must be >= 1");
    const unsigned words = (bits + 63) / 64;
    BigInt v = 0;
    for (unsigned w = 0; w < words; ++w) {
        v <<= 64;
        std::uint64_t x = next_u64();
        BigInt word;
        mpz_import(word.get_mpz_t(), 1, 1, sizeof(x), 0, 0, &x);
        v |= word;
    }
    // keep the low `bits` bits, then force the top one
    mpz_fdiv_r_2exp(v.get_mpz_t(), v.get_mpz_t(), bits);
    mpz_setbit(v.get_mpz_t(), bits - 1);
    return v;
}

BigInt SeededRng::below(const BigInt& bound) {
    if (bound <= 0) throw Error("below: bound must be positive");
    const unsigned bits = bit_length(bound);
    const unsigned words = (bits + 63) / 64;
    for (;;) {
        BigInt v = 0;
        for (unsigned w = 0; w < words; ++w) {
            v <<= 64;
            std::uint64_t x = next_u64();
            BigInt word;
            mpz_import(word.get_mpz_t(), 1, 1, sizeof(x), 0, 0, &x);
            v |= word;
        }
        mpz_fdiv_r_2exp(v.get_mpz_t(), v.get_mpz_t(), bits);
        if (v < bound) return v;
    }
}

std::uint64_t SeededRng::below_u64(std::uint64_t bound) {
    if (bound == 0) throw Error("below_u64: bound must be positive");
    if (bound == 1) return 0;
    const std::uint64_t mask = ~0ULL >> __builtin_clzll(bound - 1);
    for (;;) {
        std::uint64_t v = next_u64() & mask;
        if (v < bound) return v;
    }
}

bool is_probable_prime(const BigInt& n, int rounds) {
    return mpz_probab_prime_p(n.get_mpz_t(), rounds) != 0;
}

BigInt gen_prime(unsigned bits, SeededRng& rng) {
    if (bits < 2) throw Error("gen_prime: bits must be >= 2");
    for (;;) {
        BigInt q = rng.rand_bits(bits);
        if (bits > 2) mpz_setbit(q.get_mpz_t(), 0);
        if (is_probable_prime(q)) return q;
    }
}

BigInt mod_inv(const BigInt& a, const BigInt& p) {
    BigInt r;
    if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), p.get_mpz_t()) == 0) throw ZeroInverse();
    return r;
}

ZpPtr Zp::make(BigInt prime) { return ZpPtr(new Zp(std::move(prime))); }

Residue::Residue(BigInt v, ZpPtr field) : v_(std::move(v)), field_(std::move(field)) {
    if (!field_) throw Error("residue without a field");
    mpz_fdiv_r(v_.get_mpz_t(), v_.get_mpz_t(), field_->prime().get_mpz_t());
}

void Residue::check_same_field(const Residue& o) const {
    if (field_ == o.field_) return;
    if (field_->prime() != o.field_->prime()) throw Error("residues from different fields");
}

Residue Residue::operator+(const Residue& o) const {
    check_same_field(o);
    BigInt r = v_ + o.v_;
    if (r >= modulus()) r -= modulus();
    return Residue(std::move(r), field_);
}

Residue Residue::operator-(const Residue& o) const {
    check_same_field(o);
    BigInt r = v_ - o.v_;
    if (r < 0) r += modulus();
    return Residue(std::move(r), field_);
}

Residue Residue::operator*(const Residue& o) const {
    check_same_field(o);
    return Residue(v_ * o.v_, field_);
}

Residue Residue::operator-() const { return Residue(-v_, field_); }

bool Residue::operator==(const Residue& o) const {
    check_same_field(o);
    return v_ == o.v_;
}

Residue Residue::inv() const { return Residue(mod_inv(v_, modulus()), field_); }

BigInt signed_rep(const Residue& r) {
    if (r.value() <= r.field()->half()) return r.value();
    return r.value() - r.modulus();
}

BigInt signed_rep(const BigInt& value, const BigInt& p) {
    BigInt v;
    mpz_fdiv_r(v.get_mpz_t(), value.get_mpz_t(), p.get_mpz_t());
    if (v <= (p - 1) / 2) return v;
    return v - p;
}

}  // namespace trace
