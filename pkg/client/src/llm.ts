/**
 * Optional chat-completions adapter.
 *
 * Turns the policy seam into an HTTP call against any OpenAI-compatible
 * endpoint: render the observation to a prompt, request tool calls, parse the
 * reply. Entirely optional at runtime; nothing in the test suite touches the
 * network. Configure via environment:
 *   HEXARENA_LLM_URL    endpoint (e.g. https://host/v1/chat/completions)
 *   HEXARENA_LLM_MODEL  model id
 *   HEXARENA_LLM_KEY    bearer token (optional)
 */

import { Policy } from "./policy.js";
import { renderPrompt } from "./prompt.js";
import { parseToolCalls, toActionCalls } from "./parser.js";
import { Observation } from "./protocol.js";

export interface LlmConfig {
  url: string;
  model: string;
  apiKey?: string;
  temperature?: number;
}

export function llmConfigFromEnv(): LlmConfig | null {
  const url = process.env.HEXARENA_LLM_URL;
  const model = process.env.HEXARENA_LLM_MODEL;
  if (!url || !model) return null;
  return { url, model, apiKey: process.env.HEXARENA_LLM_KEY };
}

export function llmPolicy(config: LlmConfig, history: string[] = []): Policy {
  return async (obs: Observation) => {
    const prompt = renderPrompt(obs, history);
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (config.apiKey) headers.authorization = `Bearer ${config.apiKey}`;
    const response = await fetch(config.url, {
      method: "POST",
      headers,
      body: JSON.stringify({
        model: config.model,
        temperature: config.temperature ?? 0,
        messages: [
          { role: "system", content: "Reply with a JSON object {\"tool_calls\": [...]} only." },
          { role: "user", content: prompt },
        ],
      }),
    });
    if (!response.ok) {
      throw new Error(`llm endpoint returned ${response.status}`);
    }
    const body = (await response.json()) as {
      choices?: { message?: { content?: string; tool_calls?: unknown } }[];
    };
    const message = body.choices?.[0]?.message;
    const text =
      message?.tool_calls !== undefined
        ? JSON.stringify({ tool_calls: message.tool_calls })
        : message?.content ?? "";
    return toActionCalls(parseToolCalls(text));
  };
}
