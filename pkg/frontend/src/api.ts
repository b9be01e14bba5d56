// Typed client for the annotation task service. Every mutation goes through
// POST /api/tasks/{id}; the server is the single source of validation.

export type TaskType = 'paraphrase' | 'validate' | 'span' | 'rate';

export interface ParaphraseTurn {
    index: number;
    speaker: 'U' | 'S';
    template: string;
}

export interface ParaphraseTask {
    type: 'paraphrase';
    task_id: string;
    outline_ref: string;
    turns: ParaphraseTurn[];
}

export interface ContextTurn {
    speaker: 'U' | 'S';
    template?: string;
    utterance: string;
}

export interface ValidateTask {
    type: 'validate';
    task_id: string;
    turn_index: number;
    template: string;
    utterance: string;
    context: ContextTurn[];
}

export interface SpanTask {
    type: 'span';
    task_id: string;
    utterance: string;
    slot: string;
    value: string;
}

export interface RateTask {
    type: 'rate';
    task_id: string;
    dialogue_id: string;
    turn_index: number;
    speaker: 'U' | 'S';
    utterance: string;
    dimensions: string[];
    context: { speaker: 'U' | 'S'; utterance: string }[];
}

export type Task = ParaphraseTask | ValidateTask | SpanTask | RateTask;

export interface SubmitResult {
    ok: boolean;
    task_id: string;
}

export interface RatingSummary {
    [dimension: string]: { count: number; mean: number; stddev: number };
}

export class ServiceError extends Error {
    constructor(readonly status: number, readonly kind: string, detail: string) {
        super(detail);
    }
}

async function parseError(response: Response): Promise<ServiceError> {
    let kind = 'Error';
    let detail = `${response.status}`;
    try {
        const body = await response.json();
        kind = body.error ?? kind;
        detail = body.detail ?? detail;
    } catch {
        // non-JSON error body; keep the status text
    }
    return new ServiceError(response.status, kind, detail);
}

export class ApiClient {
    constructor(private readonly baseUrl: string = '') {}

    private async get<T>(path: string): Promise<T> {
        const response = await fetch(this.baseUrl + path);
        if (!response.ok)
            throw await parseError(response);
        return response.json() as Promise<T>;
    }

    async nextTask(type: TaskType, worker: string): Promise<Task | null> {
        const params = new URLSearchParams({ type, worker });
        const body = await this.get<{ task: Task | null }>(`/api/tasks/next?${params}`);
        return body.task;
    }

    async submit(taskId: string, payload: Record<string, unknown>): Promise<SubmitResult> {
        const response = await fetch(`${this.baseUrl}/api/tasks/${encodeURIComponent(taskId)}`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify(payload),
        });
        if (!response.ok)
            throw await parseError(response);
        return response.json() as Promise<SubmitResult>;
    }

    async status(): Promise<Record<string, unknown>> {
        return this.get('/api/status');
    }

    async ratingSummary(): Promise<RatingSummary> {
        return this.get('/api/ratings/summary');
    }
}
