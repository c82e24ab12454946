#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

namespace trace {

/// Arbitrary-precision signed integer. All arithmetic is exact.
using BigInt = mpz_class;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ZeroInverse : public Error {
public:
    ZeroInverse() : Error("zero has no modular inverse") {}
};

/// Bit length of |v|; 0 for v = 0.
unsigned bit_length(const BigInt& v);

/// Deterministic non-cryptographic PRNG. Identical seed gives an identical
/// stream across platforms and runs. Independent streams for parallel work
/// are derived with child().
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();

    /// Uniform integer with exactly `bits` bits (top bit set),
    /// i.e. in [2^(bits-1), 2^bits). Requires bits >= 1.
    BigInt rand_bits(unsigned bits);

    /// Uniform integer in [0, bound). Requires bound >= 1.
    BigInt below(const BigInt& bound);
    std::uint64_t below_u64(std::uint64_t bound);

    /// Independent stream determined by (this seed, index).
    SeededRng child(std::uint64_t index) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

/// Probable prime with exactly `bits` bits. Error probability of the
/// underlying Miller-Rabin style test is below 2^-80.
BigInt gen_prime(unsigned bits, SeededRng& rng);

bool is_probable_prime(const BigInt& n, int rounds = 40);

/// b in [1, p) with a*b = 1 (mod p). Throws ZeroInverse when a = 0 (mod p).
BigInt mod_inv(const BigInt& a, const BigInt& p);

class Zp;
using ZpPtr = std::shared_ptr<const Zp>;

/// Prime field context shared by residues, vectors and matrices.
class Zp {
public:
    static ZpPtr make(BigInt prime);

    const BigInt& prime() const { return p_; }
    /// (p-1)/2, the largest value mapped to a nonnegative signed representative.
    const BigInt& half() const { return half_; }

private:
    explicit Zp(BigInt p) : p_(std::move(p)), half_((p_ - 1) / 2) {}
    BigInt p_;
    BigInt half_;
};

/// Element of Z_p. The value is kept reduced into [0, p).
class Residue {
public:
    Residue(BigInt v, ZpPtr field);

    const BigInt& value() const { return v_; }
    const ZpPtr& field() const { return field_; }
    const BigInt& modulus() const { return field_->prime(); }
    bool is_zero() const { return v_ == 0; }

    Residue operator+(const Residue& o) const;
    Residue operator-(const Residue& o) const;
    Residue operator*(const Residue& o) const;
    Residue operator-() const;
    bool operator==(const Residue& o) const;
    bool operator!=(const Residue& o) const { return !(*this == o); }

    /// Multiplicative inverse; throws ZeroInverse on zero.
    Residue inv() const;

private:
    void check_same_field(const Residue& o) const;
    BigInt v_;
    ZpPtr field_;
};

/// Integer in [-(p-1)/2, (p-1)/2] congruent to r. Recovers small signed
/// integers from field elements.
BigInt signed_rep(const Residue& r);
BigInt signed_rep(const BigInt& value, const BigInt& p);

}  // namespace trace
