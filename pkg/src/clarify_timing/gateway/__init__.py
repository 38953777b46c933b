"""Wire contract between the protocol engine and agents.

Sessions (`gateway.session`) and grading (`gateway.grading`) depend on trial records
and are imported from their modules directly.
"""

from .endpoints import (
    EndpointSpec,
    HttpEndpoint,
    ProcessEndpoint,
    ScriptedEndpoint,
    SimulatorEndpoint,
)
from .wire import (
    ASK_USER,
    ASK_USER_TOOL,
    PROTOCOL_VERSION,
    AgentRequest,
    AgentResponse,
    Finish,
    Handshake,
    Message,
    RequestLimits,
    ToolCall,
    ToolDescriptor,
    Turn,
    decode_response,
    encode_record,
)

__all__ = [
    "ASK_USER",
    "ASK_USER_TOOL",
    "PROTOCOL_VERSION",
    "AgentRequest",
    "AgentResponse",
    "EndpointSpec",
    "Finish",
    "Handshake",
    "HttpEndpoint",
    "Message",
    "ProcessEndpoint",
    "RequestLimits",
    "ScriptedEndpoint",
    "SimulatorEndpoint",
    "ToolCall",
    "ToolDescriptor",
    "Turn",
    "decode_response",
    "encode_record",
]
