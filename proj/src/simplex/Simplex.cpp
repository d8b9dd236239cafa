#include "nnv/Simplex.h"
#include "nnv/Error.h"

#include <cmath>

namespace nnv {

namespace {

constexpr unsigned kRefactorInterval = 50;
constexpr double kReducedCostTolerance = 1e-9;
constexpr double kSingularTolerance = 1e-11;
constexpr double kStepEpsilon = 1e-12;

} // namespace

Tableau::Tableau( const std::vector<Equation> &equations, const BoundStore &bounds )
    : _m( static_cast<unsigned>( equations.size() ) )
    , _n( bounds.size() )
    , _columns( _n )
    , _rhs( _m )
    , _lower( _n + _m, 0.0 )
    , _upper( _n + _m, 0.0 )
    , _x( _n + _m, 0.0 )
    , _basis( _m )
    , _rowOf( _n + _m, -1 )
    , _atUpper( _n + _m, false )
    , _binv( static_cast<size_t>( _m ) * _m, 0.0 )
    , _iterationLimit( 50000 + 100 * ( _n + _m ) )
{
    for ( unsigned i = 0; i < _m; ++i )
    {
        const Equation &equation = equations[i];
        if ( equation.relation != Relation::Eq )
            throw UsageError( "tableau rows must be equalities (row " + std::to_string( i ) + ")" );
        for ( const auto &[variable, coefficient] : equation.lhs.terms() )
        {
            if ( variable >= _n )
                throw UsageError( "tableau row references unknown variable" );
            _columns[variable].emplace_back( i, coefficient );
        }
        _rhs[i] = equation.rhs;
    }
    for ( VariableId v = 0; v < _n; ++v )
    {
        _lower[v] = bounds.lower( v );
        _upper[v] = bounds.upper( v );
    }
    resetToLogicalBasis();
}

void Tableau::resetToLogicalBasis()
{
    for ( unsigned j = 0; j < _n + _m; ++j )
        _rowOf[j] = -1;
    for ( unsigned i = 0; i < _m; ++i )
    {
        _basis[i] = _n + i;
        _rowOf[_n + i] = static_cast<int>( i );
    }
    std::fill( _binv.begin(), _binv.end(), 0.0 );
    for ( unsigned i = 0; i < _m; ++i )
        _binv[static_cast<size_t>( i ) * _m + i] = 1.0;
    for ( unsigned j = 0; j < _n; ++j )
        placeNonbasic( j );
    _pivotsSinceRefactor = 0;
    _valuesDirty = true;
}

void Tableau::placeNonbasic( unsigned j )
{
    bool lowerFinite = std::isfinite( _lower[j] );
    bool upperFinite = std::isfinite( _upper[j] );
    if ( _atUpper[j] && !upperFinite )
        _atUpper[j] = false;
    if ( !_atUpper[j] && !lowerFinite && upperFinite )
        _atUpper[j] = true;

    if ( _atUpper[j] )
        _x[j] = _upper[j];
    else if ( lowerFinite )
        _x[j] = _lower[j];
    else
        _x[j] = 0;
}

void Tableau::setLowerBound( VariableId variable, double value )
{
    _lower[variable] = value;
    if ( _rowOf[variable] < 0 )
    {
        placeNonbasic( variable );
        _valuesDirty = true;
    }
}

void Tableau::setUpperBound( VariableId variable, double value )
{
    _upper[variable] = value;
    if ( _rowOf[variable] < 0 )
    {
        placeNonbasic( variable );
        _valuesDirty = true;
    }
}

void Tableau::syncBounds( const BoundStore &bounds )
{
    for ( VariableId v = 0; v < _n; ++v )
    {
        if ( _lower[v] != bounds.lower( v ) || _upper[v] != bounds.upper( v ) )
        {
            _lower[v] = bounds.lower( v );
            _upper[v] = bounds.upper( v );
            if ( _rowOf[v] < 0 )
            {
                placeNonbasic( v );
                _valuesDirty = true;
            }
        }
    }
}

void Tableau::column( unsigned j, std::vector<double> &out ) const
{
    // out = B^{-1} a_j
    out.assign( _m, 0.0 );
    if ( j >= _n )
    {
        unsigned row = j - _n;
        for ( unsigned i = 0; i < _m; ++i )
            out[i] = _binv[static_cast<size_t>( i ) * _m + row];
        return;
    }
    for ( const auto &[row, coefficient] : _columns[j] )
        for ( unsigned i = 0; i < _m; ++i )
            out[i] += _binv[static_cast<size_t>( i ) * _m + row] * coefficient;
}

double Tableau::dotColumn( const std::vector<double> &y, unsigned j ) const
{
    if ( j >= _n )
        return y[j - _n];
    double sum = 0;
    for ( const auto &[row, coefficient] : _columns[j] )
        sum += y[row] * coefficient;
    return sum;
}

void Tableau::computeBasicValues()
{
    std::vector<double> residual( _rhs );
    for ( unsigned j = 0; j < _n; ++j )
    {
        if ( _rowOf[j] >= 0 || _x[j] == 0 )
            continue;
        for ( const auto &[row, coefficient] : _columns[j] )
            residual[row] -= coefficient * _x[j];
    }
    for ( unsigned i = 0; i < _m; ++i )
        if ( _rowOf[_n + i] < 0 )
            residual[i] -= _x[_n + i];

    for ( unsigned i = 0; i < _m; ++i )
    {
        double sum = 0;
        const double *row = &_binv[static_cast<size_t>( i ) * _m];
        for ( unsigned k = 0; k < _m; ++k )
            sum += row[k] * residual[k];
        _x[_basis[i]] = sum;
    }
    _valuesDirty = false;
}

void Tableau::refactor()
{
    _pivotsSinceRefactor = 0;
    if ( _m == 0 )
        return;

    // Gauss-Jordan on [B | I] with partial pivoting.
    std::vector<double> work( static_cast<size_t>( _m ) * _m, 0.0 );
    for ( unsigned c = 0; c < _m; ++c )
    {
        unsigned j = _basis[c];
        if ( j >= _n )
            work[static_cast<size_t>( j - _n ) * _m + c] = 1.0;
        else
            for ( const auto &[row, coefficient] : _columns[j] )
                work[static_cast<size_t>( row ) * _m + c] = coefficient;
    }
    std::vector<double> inverse( static_cast<size_t>( _m ) * _m, 0.0 );
    for ( unsigned i = 0; i < _m; ++i )
        inverse[static_cast<size_t>( i ) * _m + i] = 1.0;

    for ( unsigned c = 0; c < _m; ++c )
    {
        unsigned pivotRow = c;
        double best = std::fabs( work[static_cast<size_t>( c ) * _m + c] );
        for ( unsigned r = c + 1; r < _m; ++r )
        {
            double candidate = std::fabs( work[static_cast<size_t>( r ) * _m + c] );
            if ( candidate > best )
            {
                best = candidate;
                pivotRow = r;
            }
        }
        if ( best < kSingularTolerance )
        {
            resetToLogicalBasis();
            computeBasicValues();
            return;
        }
        if ( pivotRow != c )
            for ( unsigned k = 0; k < _m; ++k )
            {
                std::swap( work[static_cast<size_t>( c ) * _m + k],
                           work[static_cast<size_t>( pivotRow ) * _m + k] );
                std::swap( inverse[static_cast<size_t>( c ) * _m + k],
                           inverse[static_cast<size_t>( pivotRow ) * _m + k] );
            }
        double pivot = work[static_cast<size_t>( c ) * _m + c];
        for ( unsigned k = 0; k < _m; ++k )
        {
            work[static_cast<size_t>( c ) * _m + k] /= pivot;
            inverse[static_cast<size_t>( c ) * _m + k] /= pivot;
        }
        for ( unsigned r = 0; r < _m; ++r )
        {
            if ( r == c )
                continue;
            double factor = work[static_cast<size_t>( r ) * _m + c];
            if ( factor == 0 )
                continue;
            for ( unsigned k = 0; k < _m; ++k )
            {
                work[static_cast<size_t>( r ) * _m + k] -= factor * work[static_cast<size_t>( c ) * _m + k];
                inverse[static_cast<size_t>( r ) * _m + k] -=
                    factor * inverse[static_cast<size_t>( c ) * _m + k];
            }
        }
    }
    // Row c of B^{-1} belongs to basis position c.
    _binv = std::move( inverse );
    _valuesDirty = true;
}

bool Tableau::basicInfeasible() const
{
    for ( unsigned i = 0; i < _m; ++i )
    {
        unsigned k = _basis[i];
        if ( _x[k] < _lower[k] - tolerance::kLp || _x[k] > _upper[k] + tolerance::kLp )
            return true;
    }
    return false;
}

LpOutcome Tableau::maximize( const LinearExpression &objective )
{
    LinearExpression negated = objective;
    negated *= -1.0;
    LpOutcome outcome = solve( negated );
    outcome.value = -outcome.value;
    return outcome;
}

const std::vector<double> &Tableau::farkasRay() const
{
    if ( !_lastInfeasible )
        throw UsageError( "no Farkas ray: the last solve did not end infeasible" );
    return _lastRay;
}

LpOutcome Tableau::solve( const LinearExpression &objective )
{
    for ( unsigned j = 0; j < _n; ++j )
        if ( _lower[j] > _upper[j] + tolerance::kFeasibility )
            throw UsageError( "tableau bounds of x" + std::to_string( j ) + " are crossed" );

    _lastInfeasible = false;
    const unsigned total = _n + _m;
    std::vector<double> cost( total, 0.0 );
    for ( const auto &[variable, coefficient] : objective.terms() )
        cost[variable] = coefficient;

    if ( _valuesDirty )
        computeBasicValues();

    std::vector<double> costBasic( _m );
    std::vector<double> y( _m );
    std::vector<double> alpha;
    Rule rule = Rule::Dantzig;
    unsigned degenerateSteps = 0;
    const unsigned blandThreshold = 3 * ( _m + _n );

    for ( unsigned iteration = 0;; ++iteration )
    {
        if ( iteration > _iterationLimit )
            throw NumericalError( "simplex iteration limit exceeded" );

        if ( _pivotsSinceRefactor >= kRefactorInterval )
        {
            refactor();
            computeBasicValues();
        }

        bool phaseOne = basicInfeasible();
        for ( unsigned i = 0; i < _m; ++i )
        {
            unsigned k = _basis[i];
            if ( phaseOne )
                costBasic[i] = _x[k] > _upper[k] + tolerance::kLp   ? 1.0
                             : _x[k] < _lower[k] - tolerance::kLp ? -1.0
                                                                   : 0.0;
            else
                costBasic[i] = cost[k];
        }
        for ( unsigned k = 0; k < _m; ++k )
        {
            double sum = 0;
            for ( unsigned i = 0; i < _m; ++i )
                sum += costBasic[i] * _binv[static_cast<size_t>( i ) * _m + k];
            y[k] = sum;
        }

        int entering = -1;
        int direction = 0;
        double bestScore = 0;
        for ( unsigned j = 0; j < total; ++j )
        {
            if ( _rowOf[j] >= 0 || _upper[j] - _lower[j] <= 0 )
                continue;
            double reduced = ( phaseOne ? 0.0 : cost[j] ) - dotColumn( y, j );
            double score = 0;
            int dir = 0;
            if ( reduced < -kReducedCostTolerance && _upper[j] - _x[j] > tolerance::kTighten )
            {
                score = -reduced;
                dir = 1;
            }
            else if ( reduced > kReducedCostTolerance && _x[j] - _lower[j] > tolerance::kTighten )
            {
                score = reduced;
                dir = -1;
            }
            else
                continue;

            if ( rule == Rule::Bland )
            {
                entering = static_cast<int>( j );
                direction = dir;
                break;
            }
            if ( score > bestScore )
            {
                bestScore = score;
                entering = static_cast<int>( j );
                direction = dir;
            }
        }

        if ( entering < 0 )
        {
            if ( _pivotsSinceRefactor > 0 )
            {
                refactor();
                computeBasicValues();
                continue;
            }
            LpOutcome outcome;
            outcome.assignment.assign( _x.begin(), _x.begin() + _n );
            outcome.rowMultipliers = y;
            if ( phaseOne )
            {
                outcome.status = LpStatus::Infeasible;
                _lastInfeasible = true;
                _lastRay = y;
            }
            else
            {
                outcome.status = LpStatus::Optimal;
                double value = objective.constant();
                for ( const auto &[variable, coefficient] : objective.terms() )
                    value += coefficient * _x[variable];
                outcome.value = value;
            }
            return outcome;
        }

        unsigned j = static_cast<unsigned>( entering );
        column( j, alpha );

        double flipDistance = direction > 0 ? _upper[j] - _x[j] : _x[j] - _lower[j];
        double bestStep = kInfinity;
        int leavingRow = -1;
        bool leavingToUpper = false;
        for ( unsigned i = 0; i < _m; ++i )
        {
            double a = alpha[i];
            if ( std::fabs( a ) < tolerance::kPivot )
                continue;
            double rate = -direction * a;
            unsigned k = _basis[i];
            double xi = _x[k];
            double target;
            if ( rate < 0 )
            {
                if ( xi > _upper[k] + tolerance::kLp )
                    target = _upper[k];
                else if ( xi >= _lower[k] - tolerance::kLp && std::isfinite( _lower[k] ) )
                    target = _lower[k];
                else
                    continue;
            }
            else
            {
                if ( xi < _lower[k] - tolerance::kLp )
                    target = _lower[k];
                else if ( xi <= _upper[k] + tolerance::kLp && std::isfinite( _upper[k] ) )
                    target = _upper[k];
                else
                    continue;
            }
            double step = std::max( 0.0, ( target - xi ) / rate );
            bool better = false;
            if ( step < bestStep - kStepEpsilon )
                better = true;
            else if ( std::fabs( step - bestStep ) <= kStepEpsilon && leavingRow >= 0 )
                better = rule == Rule::Bland ? k < _basis[leavingRow]
                                             : std::fabs( a ) > std::fabs( alpha[leavingRow] );
            if ( better )
            {
                bestStep = step;
                leavingRow = static_cast<int>( i );
                leavingToUpper = ( target == _upper[k] );
            }
        }

        double step = std::min( bestStep, flipDistance );
        if ( !std::isfinite( step ) )
        {
            if ( phaseOne )
                throw NumericalError( "unbounded ray during phase one" );
            LpOutcome outcome;
            outcome.status = LpStatus::Unbounded;
            outcome.assignment.assign( _x.begin(), _x.begin() + _n );
            outcome.value = -kInfinity;
            return outcome;
        }

        if ( step < kStepEpsilon )
        {
            if ( ++degenerateSteps > blandThreshold )
                rule = Rule::Bland;
        }
        else
        {
            degenerateSteps = 0;
            rule = Rule::Dantzig;
        }

        _x[j] += direction * step;
        for ( unsigned i = 0; i < _m; ++i )
            _x[_basis[i]] += -direction * alpha[i] * step;

        if ( flipDistance <= bestStep )
        {
            _atUpper[j] = direction > 0;
            _x[j] = direction > 0 ? _upper[j] : _lower[j];
            continue;
        }

        unsigned r = static_cast<unsigned>( leavingRow );
        unsigned leaving = _basis[r];
        _x[leaving] = leavingToUpper ? _upper[leaving] : _lower[leaving];
        _atUpper[leaving] = leavingToUpper;
        _rowOf[leaving] = -1;
        _basis[r] = j;
        _rowOf[j] = static_cast<int>( r );

        double pivot = alpha[r];
        double *pivotRow = &_binv[static_cast<size_t>( r ) * _m];
        for ( unsigned k = 0; k < _m; ++k )
            pivotRow[k] /= pivot;
        for ( unsigned i = 0; i < _m; ++i )
        {
            if ( i == r || alpha[i] == 0 )
                continue;
            double factor = alpha[i];
            double *row = &_binv[static_cast<size_t>( i ) * _m];
            for ( unsigned k = 0; k < _m; ++k )
                row[k] -= factor * pivotRow[k];
        }
        ++_pivots;
        ++_pivotsSinceRefactor;
    }
}

} // namespace nnv
