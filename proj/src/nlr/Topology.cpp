#include "nnv/Error.h"
#include "nnv/NetworkReasoner.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace nnv::nlr {

const char *layerKindName( LayerKind kind )
{
    switch ( kind )
    {
    case LayerKind::Input:
        return "input";
    case LayerKind::WeightedSum:
        return "weighted-sum";
    case LayerKind::Relu:
        return "relu";
    case LayerKind::LeakyRelu:
        return "leaky";
    case LayerKind::Abs:
        return "abs";
    case LayerKind::Sign:
        return "sign";
    case LayerKind::Max:
        return "max";
    }
    return "?";
}

std::optional<NeuronRef> NetworkTopology::locate( VariableId variable ) const
{
    for ( const Layer &layer : layers )
        for ( unsigned i = 0; i < layer.neurons.size(); ++i )
            if ( layer.neurons[i].variable == variable )
                return NeuronRef{ layer.id, i };
    return std::nullopt;
}

LayerIntervals NetworkTopology::storeIntervals( const BoundStore &bounds ) const
{
    LayerIntervals out( layers.size() );
    for ( const Layer &layer : layers )
        for ( const Neuron &n : layer.neurons )
            out[layer.id].push_back( { bounds.lower( n.variable ), bounds.upper( n.variable ) } );
    return out;
}

std::string NetworkTopology::describe() const
{
    std::ostringstream out;
    for ( const Layer &layer : layers )
    {
        out << layer.id << ' ' << layerKindName( layer.kind ) << " width=" << layer.neurons.size();
        if ( !layer.sourceLayers.empty() )
        {
            out << " from";
            for ( unsigned s : layer.sourceLayers )
                out << ' ' << s;
        }
        out << '\n';
    }
    return out.str();
}

namespace {

std::optional<LayerKind> layerKindOf( PLKind kind )
{
    switch ( kind )
    {
    case PLKind::Relu:
        return LayerKind::Relu;
    case PLKind::LeakyRelu:
        return LayerKind::LeakyRelu;
    case PLKind::Abs:
        return LayerKind::Abs;
    case PLKind::Sign:
        return LayerKind::Sign;
    case PLKind::Max:
        return LayerKind::Max;
    case PLKind::Disjunction:
        break;
    }
    return std::nullopt;
}

Neuron neuronFor( VariableId variable )
{
    Neuron n;
    n.variable = variable;
    return n;
}

class TopologyBuilder
{
public:
    explicit TopologyBuilder( const Query &query )
        : _query( query )
        , _placed( query.numVariables() )
        , _isAux( query.numVariables(), false )
        , _equationDone( query.equations.size(), false )
    {
        for ( const PLConstraint &c : query.constraints )
            for ( VariableId a : c.aux )
                _isAux[a] = true;
    }

    std::optional<NetworkTopology> build()
    {
        Layer input;
        input.kind = LayerKind::Input;
        for ( VariableId v : _query.inputVariables )
            if ( !_placed[v] )
            {
                _placed[v] = NeuronRef{ 0, static_cast<unsigned>( input.neurons.size() ) };
                input.neurons.push_back( neuronFor( v ) );
            }
        if ( input.neurons.empty() )
            return std::nullopt;
        _topology.layers.push_back( std::move( input ) );

        while ( placeActivations() | placeWeightedSums() )
            ;

        if ( _topology.layers.size() < 2 )
            return std::nullopt;
        for ( VariableId v : _query.outputVariables )
            if ( !_placed[v] )
                return std::nullopt;
        return std::move( _topology );
    }

private:
    bool placeActivations()
    {
        std::map<LayerKind, Layer> fresh;
        std::set<VariableId> claimed;
        for ( const PLConstraint &c : _query.constraints )
        {
            auto kind = layerKindOf( c.kind );
            if ( !kind || _placed[c.f] || claimed.count( c.f ) )
                continue;
            std::vector<VariableId> sources = c.kind == PLKind::Max ? c.inputs : std::vector<VariableId>{ c.b };
            if ( !std::all_of( sources.begin(), sources.end(), [&]( VariableId v ) { return _placed[v].has_value(); } ) )
                continue;
            Neuron n = neuronFor( c.f );
            n.alpha = c.alpha;
            for ( VariableId v : sources )
                n.sources.push_back( *_placed[v] );
            fresh[*kind].kind = *kind;
            fresh[*kind].neurons.push_back( std::move( n ) );
            claimed.insert( c.f );
        }
        for ( auto &[kind, layer] : fresh )
            commit( std::move( layer ) );
        return !fresh.empty();
    }

    bool placeWeightedSums()
    {
        Layer layer;
        layer.kind = LayerKind::WeightedSum;
        std::set<VariableId> claimed;
        for ( unsigned e = 0; e < _query.equations.size(); ++e )
        {
            const Equation &eq = _query.equations[e];
            if ( _equationDone[e] || eq.relation != Relation::Eq )
                continue;
            std::optional<VariableId> unplaced;
            unsigned count = 0;
            bool touchesAux = false;
            for ( const auto &[v, a] : eq.lhs.terms() )
            {
                touchesAux = touchesAux || _isAux[v];
                if ( !_placed[v] )
                {
                    unplaced = v;
                    ++count;
                }
            }
            if ( touchesAux || count == 0 )
            {
                _equationDone[e] = true;
                continue;
            }
            if ( count > 1 || claimed.count( *unplaced ) )
                continue;
            double a = eq.lhs.coefficient( *unplaced );
            Neuron n = neuronFor( *unplaced );
            n.bias = eq.rhs / a;
            for ( const auto &[v, c] : eq.lhs.terms() )
                if ( v != *unplaced )
                    n.terms.push_back( { *_placed[v], -c / a } );
            layer.neurons.push_back( std::move( n ) );
            claimed.insert( *unplaced );
            _equationDone[e] = true;
        }
        if ( layer.neurons.empty() )
            return false;
        commit( std::move( layer ) );
        return true;
    }

    void commit( Layer layer )
    {
        layer.id = static_cast<unsigned>( _topology.layers.size() );
        std::set<unsigned> sources;
        for ( unsigned i = 0; i < layer.neurons.size(); ++i )
        {
            const Neuron &n = layer.neurons[i];
            for ( const WeightedTerm &t : n.terms )
                sources.insert( t.source.layer );
            for ( const NeuronRef &r : n.sources )
                sources.insert( r.layer );
            _placed[n.variable] = NeuronRef{ layer.id, i };
        }
        layer.sourceLayers.assign( sources.begin(), sources.end() );
        _topology.layers.push_back( std::move( layer ) );
    }

    const Query &_query;
    std::vector<std::optional<NeuronRef>> _placed;
    std::vector<bool> _isAux;
    std::vector<bool> _equationDone;
    NetworkTopology _topology;
};

} // namespace

std::optional<NetworkTopology> inferTopology( const Query &query )
{
    return TopologyBuilder( query ).build();
}

LayerValues evaluate( const NetworkTopology &topology, std::span<const double> inputs )
{
    if ( inputs.size() != topology.numInputs() )
        throw UsageError( "expected " + std::to_string( topology.numInputs() ) + " input values" );
    LayerValues values( topology.layers.size() );
    values[0].assign( inputs.begin(), inputs.end() );
    auto at = [&]( const NeuronRef &r ) { return values[r.layer][r.neuron]; };
    for ( size_t l = 1; l < topology.layers.size(); ++l )
    {
        const Layer &layer = topology.layers[l];
        for ( const Neuron &n : layer.neurons )
        {
            double x = n.sources.empty() ? 0 : at( n.sources[0] );
            double y = 0;
            switch ( layer.kind )
            {
            case LayerKind::Input:
                break;
            case LayerKind::WeightedSum:
                y = n.bias;
                for ( const WeightedTerm &t : n.terms )
                    y += t.weight * at( t.source );
                break;
            case LayerKind::Relu:
                y = std::max( 0.0, x );
                break;
            case LayerKind::LeakyRelu:
                y = x >= 0 ? x : n.alpha * x;
                break;
            case LayerKind::Abs:
                y = std::abs( x );
                break;
            case LayerKind::Sign:
                y = x >= 0 ? 1 : -1;
                break;
            case LayerKind::Max:
                y = x;
                for ( const NeuronRef &r : n.sources )
                    y = std::max( y, at( r ) );
                break;
            }
            values[l].push_back( y );
        }
    }
    return values;
}

const char *analysisName( Analysis analysis )
{
    switch ( analysis )
    {
    case Analysis::Ibp:
        return "ibp";
    case Analysis::Symbolic:
        return "sbt";
    case Analysis::DeepPoly:
        return "deeppoly";
    case Analysis::Lp:
        return "lp";
    }
    return "?";
}

std::vector<Analysis> parseAnalyses( const std::string &list )
{
    std::vector<Analysis> out;
    std::istringstream in( list );
    std::string name;
    while ( std::getline( in, name, ',' ) )
    {
        if ( name.empty() )
            continue;
        bool found = false;
        for ( Analysis a : { Analysis::Ibp, Analysis::Symbolic, Analysis::DeepPoly, Analysis::Lp } )
            if ( name == analysisName( a ) )
            {
                out.push_back( a );
                found = true;
            }
        if ( !found )
            throw UsageError( "unknown analysis '" + name + "' (expected ibp, sbt, deeppoly or lp)" );
    }
    return out;
}

} // namespace nnv::nlr
